// outersync: simulate, check and compare sampled-data synchronization rules.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <outersync/outersync.hpp>

namespace fs = std::filesystem;
using namespace outersync;

namespace {

struct CommonArgs {
	std::string preset;
	std::string config;
	std::string rule;
	std::string norm;
	std::optional<std::uint64_t> seed;
	std::optional<double> horizon;
	std::string out;
	std::optional<double> eps_c, eps_d, eps0;
	std::string xi;
	std::optional<double> solve_xi;
	std::string thresholds;
};

void add_common(CLI::App* app, CommonArgs& a, bool with_rule) {
	app->add_option("--preset", a.preset, "built-in system")->check(CLI::IsMember(preset_names()));
	app->add_option("--config", a.config, "JSON run config")->check(CLI::ExistingFile);
	if (with_rule) {
		app->add_option("--rule", a.rule, "trigger protocol")
			->check(CLI::IsMember({"centralized-structure", "decentralized-structure", "centralized-state",
		                           "decentralized-state"}));
		app->add_option("--thresholds", a.thresholds, "state-rule thresholds")
			->check(CLI::IsMember({"preset", "adaptive"}));
	}
	app->add_option("--norm", a.norm, "l1, l2 or linf")->check(CLI::IsMember({"l1", "l2", "linf"}));
	app->add_option("--seed", a.seed, "seed for switching and initial state");
	app->add_option("--horizon", a.horizon, "simulated time")->check(CLI::PositiveNumber);
	app->add_option("--out", a.out, "output directory (OUTERSYNC_OUT overrides)");
	app->add_option("--eps-c", a.eps_c, "centralized margin")->check(CLI::Range(0.0, 1.0));
	app->add_option("--eps-d", a.eps_d, "push-based margin")->check(CLI::Range(0.0, 1.0));
	app->add_option("--eps0", a.eps0, "required lower bound on mu")->check(CLI::PositiveNumber);
	auto* xi = app->add_option("--xi", a.xi, "comma-separated weights");
	app->add_option("--solve-xi", a.solve_xi, "solve weights for this eps0 target")
		->check(CLI::PositiveNumber)
		->excludes(xi);
}

Vector parse_list(const std::string& s) {
	Vector v;
	std::stringstream ss(s);
	std::string item;
	while (std::getline(ss, item, ',')) {
		try {
			std::size_t used = 0;
			v.push_back(std::stod(item, &used));
			if (used != item.size())
				throw std::invalid_argument(item);
		} catch (const std::exception&) {
			throw ValidationError("not a number: '" + item + "'", "xi");
		}
	}
	return v;
}

RunConfig build_config(const CommonArgs& a) {
	RunConfig c;
	const std::string preset = a.preset.empty() && a.config.empty() ? "sec6-5neuron" : a.preset;
	if (!a.config.empty()) {
		c = load_config(a.config);
		if (!preset.empty() && preset != c.preset)
			throw ValidationError("--preset conflicts with the config file", "preset");
	} else {
		const Protocol p = a.rule.empty() ? Protocol::centralized_structure : parse_protocol(a.rule);
		const NormKind k = a.norm.empty() ? NormKind::L1 : parse_norm(a.norm);
		c = preset_config(preset, p, k, a.seed.value_or(1), a.horizon.value_or(0.0));
	}
	if (!a.rule.empty())
		c.rule.protocol = parse_protocol(a.rule);
	if (!a.norm.empty())
		c.rule.norm = parse_norm(a.norm);
	if (a.seed)
		c.seed = *a.seed;
	if (a.horizon)
		c.horizon = *a.horizon;
	if (a.eps_c)
		c.rule.eps_c = *a.eps_c;
	if (a.eps_d)
		c.rule.eps_d = *a.eps_d;
	if (a.eps0)
		c.rule.eps0 = *a.eps0;
	if (!a.xi.empty()) {
		c.xi.explicit_xi = parse_list(a.xi);
		c.xi.solve_eps0.reset();
	}
	if (a.solve_xi) {
		c.xi.explicit_xi.reset();
		c.xi.solve_eps0 = *a.solve_xi;
	}
	if (!a.out.empty())
		c.output = a.out;

	// thresholds follow the protocol when it was changed on the command line
	if (!is_structure(c.rule.protocol)) {
		const bool fits = c.rule.protocol == Protocol::centralized_state
		                      ? c.rule.thresholds.layout == ThresholdSpec::Layout::global
		                      : c.rule.thresholds.layout == ThresholdSpec::Layout::per_neuron ||
		                            c.rule.thresholds.layout == ThresholdSpec::Layout::adaptive;
		if (a.thresholds == "adaptive") {
			if (c.rule.protocol != Protocol::decentralized_state)
				throw ValidationError("adaptive thresholds apply to decentralized-state only", "thresholds");
			c.rule.thresholds = ThresholdSpec::make_adaptive({0.2, {}, c.horizon});
			c.threshold_preset.clear();
		} else if (!fits || a.thresholds == "preset") {
			if (c.preset.empty())
				throw ValidationError("state rule needs thresholds in the config", "rule.thresholds");
			const RunConfig d = preset_config(c.preset, c.rule.protocol, c.rule.norm, c.seed, c.horizon);
			c.rule.thresholds = d.rule.thresholds;
			c.threshold_preset = d.threshold_preset;
		}
	} else {
		c.rule.thresholds = {};
		c.threshold_preset.clear();
	}
	return c;
}

int cmd_simulate(const CommonArgs& a, bool plot, bool oracle) {
	RunConfig cfg = build_config(a);
	if (oracle)
		cfg.integrator.oracle_mode = true;
	const ResolvedRun run = resolve(cfg);
	SimulationTrace trace = simulate(run.system, run.rule, run.xi, run.u0, run.v0, run.integrator);
	trace.config_echo = to_json(cfg).dump();

	const fs::path dir = output_dir(cfg.output);
	fs::create_directories(dir);
	const std::string stem = to_string(trace.protocol) + "_" + to_string(trace.norm);
	{
		std::ofstream csv(dir / (stem + ".csv"));
		if (!csv)
			throw SimulationError("cannot write " + (dir / (stem + ".csv")).string());
		write_csv(csv, trace);
	}
	const json summary = summary_json(trace, run.system, run.feasibility);
	write_text(dir / (stem + ".summary.json"), summary.dump(2) + "\n");
	if (plot)
		write_text(dir / (stem + ".gp"), plot_script(stem + ".csv", trace.n, trace.config_echo));

	const auto& ev = summary["events"];
	std::printf("%s (%s): %zu triggers, min gap %.6g, ||w|| %.6g -> %.6g\n", to_string(trace.protocol).c_str(),
	            to_string(trace.norm).c_str(), ev["trigger_count"].get<std::size_t>(), ev["min_gap"].get<double>(),
	            summary["initial_norms"][to_string(trace.norm)].get<double>(),
	            summary["final_norms"][to_string(trace.norm)].get<double>());
	for (const auto& r : summary["diagnostics"])
		if (r["status"] != "not-applicable")
			std::printf("  %-22s %s\n", r["check"].get<std::string>().c_str(), r["status"].get<std::string>().c_str());
	std::printf("wrote %s\n", (dir / stem).string().c_str());
	return 0;
}

int cmd_feasibility(const CommonArgs& a, std::optional<std::size_t> interval) {
	RunConfig cfg = build_config(a);
	const SwitchingSystem system = build_system(cfg);
	std::vector<Mode> modes = system.modes;
	if (interval) {
		if (*interval == 0 || *interval > modes.size())
			throw ValidationError("interval must be between 1 and " + std::to_string(modes.size()), "interval");
		modes = {system.modes[*interval - 1]};
	}
	const double target = cfg.xi.solve_eps0.value_or(cfg.rule.eps0);
	std::vector<NormKind> norms;
	if (a.norm.empty())
		norms.assign(std::begin(all_norms), std::end(all_norms));
	else
		norms.push_back(parse_norm(a.norm));

	json reports = json::array();
	for (NormKind k : norms) {
		const FeasibilityResult f = solve_xi(modes, system.gains(), k, target);
		json r = to_json(f);
		if (f.xi)
			r["bounds"] = to_json(global_bounds(modes, system.gains(), *f.xi, k));
		reports.push_back(r);
	}
	json doc{{"config", to_json(cfg)},
	         {"interval", interval ? json(*interval) : json(nullptr)},
	         {"reports", reports}};
	const fs::path dir = output_dir(cfg.output);
	write_text(dir / "feasibility.json", doc.dump(2) + "\n");
	std::cout << (reports.size() == 1 ? reports[0] : reports).dump(2) << "\n";
	return 0;
}

void print_table(const std::vector<NormComparison>& table) {
	for (const auto& c : table) {
		std::printf("\nnorm %s\n", to_string(c.norm).c_str());
		std::printf("  %-24s %12s %12s %12s %12s %8s\n", "rule", "count", "min gap", "||w(0)||", "||w(T)||", "r^2");
		for (const auto& r : c.rules) {
			if (!r.ok()) {
				std::printf("  %-24s refused: %s\n", to_string(r.protocol).c_str(), r.error_message.c_str());
				continue;
			}
			std::printf("  %-24s %12.1f %12.4g %12.4g %12.4g %8.3f\n", to_string(r.protocol).c_str(),
			            r.comparable_count(), r.stats.min_gap, r.initial_error, r.final_error,
			            r.fit ? r.fit->r_squared : 0.0);
		}
		std::printf("  ordering: structure > state (centralized %s, push %s); push >= centralized (structure %s, state %s)\n",
		            c.ordering.structure_above_state_centralized ? "yes" : "no",
		            c.ordering.structure_above_state_decentralized ? "yes" : "no",
		            c.ordering.decentralized_at_least_centralized_structure ? "yes" : "no",
		            c.ordering.decentralized_at_least_centralized_state ? "yes" : "no");
	}
}

int cmd_compare(const CommonArgs& a, double bin_width, bool force_sec6, const std::string& name) {
	CommonArgs args = a;
	if (force_sec6 && args.config.empty() && args.preset.empty())
		args.preset = "sec6-5neuron";
	RunConfig base = build_config(args);
	CompareOptions opt;
	opt.bin_width = bin_width;
	if (!a.norm.empty())
		opt.norms = {parse_norm(a.norm)};
	const auto table = compare_rules(base, opt);

	const fs::path dir = output_dir(base.output);
	fs::create_directories(dir);
	json doc{{"config", to_json(base)}, {"bin_width", bin_width}, {"norms", json::array()}};
	bool all_hold = true;
	for (const auto& c : table) {
		doc["norms"].push_back(to_json(c, bin_width));
		all_hold = all_hold && c.ordering.holds();
		std::ofstream csv(dir / (name + "_log_error_" + to_string(c.norm) + ".csv"));
		write_error_series_csv(csv, c, to_json(base).dump());
	}
	doc["ordering_holds"] = all_hold;
	write_text(dir / (name + ".json"), doc.dump(2) + "\n");
	print_table(table);
	std::printf("\nwrote %s\n", (dir / (name + ".json")).string().c_str());
	return 0;
}

int cmd_schedule(double lambda, double horizon, std::size_t modes, std::uint64_t seed, const std::string& selection,
                 const std::string& out) {
	const SwitchSchedule s =
		poisson_schedule(lambda, horizon, modes, seed, selection == "cyclic" ? ModeSelection::cyclic : ModeSelection::uniform);
	json doc{{"config",
	          {{"lambda", lambda}, {"horizon", horizon}, {"modes", modes}, {"seed", seed}, {"selection", selection}}},
	         {"breakpoints", s.breakpoints},
	         {"mode_index", s.mode_index}};
	const fs::path dir = output_dir(out);
	write_text(dir / "schedule.json", doc.dump(2) + "\n");
	std::printf("%zu segments on [0, %g]\n", s.segment_count(), horizon);
	for (std::size_t k = 0; k < std::min<std::size_t>(s.segment_count(), 10); ++k)
		std::printf("  [%10.4f, %10.4f)  mode %zu\n", s.breakpoints[k], s.segment_end(k), s.mode_index[k] + 1);
	if (s.segment_count() > 10)
		std::printf("  ...\n");
	return 0;
}

} // namespace

int main(int argc, char** argv) {
	CLI::App app{"Sampled-data out-synchronization of switched Hopfield networks"};
	app.require_subcommand(1);

	CommonArgs sim_args;
	bool plot = true, oracle = false;
	auto* sim = app.add_subcommand("simulate", "run one trigger rule and export the trace");
	add_common(sim, sim_args, true);
	sim->add_flag("!--no-plot", plot, "skip the gnuplot script");
	sim->add_flag("--oracle", oracle, "cross-check segments with a fine RK4");

	CommonArgs feas_args;
	std::optional<std::size_t> interval;
	auto* feas = app.add_subcommand("feasibility", "solve for weights xi with mu >= eps0");
	add_common(feas, feas_args, false);
	feas->add_option("--interval", interval, "restrict to one mode (1-based)");

	CommonArgs rep_args;
	double rep_bins = 50.0;
	auto* rep = app.add_subcommand("reproduce", "all four rules on the 5-neuron preset");
	add_common(rep, rep_args, false);
	rep->add_option("--bin-width", rep_bins, "trigger-count bin width")->check(CLI::PositiveNumber);

	CommonArgs cmp_args;
	double cmp_bins = 50.0;
	auto* cmp = app.add_subcommand("compare", "event statistics of all rules on one system");
	add_common(cmp, cmp_args, false);
	cmp->add_option("--bin-width", cmp_bins, "trigger-count bin width")->check(CLI::PositiveNumber);

	double lambda = 1.0, sched_horizon = 500.0;
	std::size_t sched_modes = 6;
	std::uint64_t sched_seed = 1;
	std::string selection = "uniform", sched_out = "out";
	auto* sched = app.add_subcommand("schedule", "draw a Poisson switching schedule");
	sched->add_option("--lambda", lambda, "switching rate")->check(CLI::PositiveNumber);
	sched->add_option("--horizon", sched_horizon, "length")->check(CLI::PositiveNumber);
	sched->add_option("--modes", sched_modes, "number of modes")->check(CLI::PositiveNumber);
	sched->add_option("--seed", sched_seed, "seed");
	sched->add_option("--selection", selection, "uniform or cyclic")->check(CLI::IsMember({"uniform", "cyclic"}));
	sched->add_option("--out", sched_out, "output directory");

	CLI11_PARSE(app, argc, argv);

	try {
		if (*sim)
			return cmd_simulate(sim_args, plot, oracle);
		if (*feas)
			return cmd_feasibility(feas_args, interval);
		if (*rep) {
			if (!rep_args.preset.empty() && rep_args.preset != "sec6-5neuron")
				throw ValidationError("reproduce runs the sec6-5neuron preset", "preset");
			return cmd_compare(rep_args, rep_bins, true, "reproduce");
		}
		if (*cmp)
			return cmd_compare(cmp_args, cmp_bins, false, "compare");
		if (*sched)
			return cmd_schedule(lambda, sched_horizon, sched_modes, sched_seed, selection, sched_out);
	} catch (const ValidationError& e) {
		std::fprintf(stderr, "error: invalid input: %s\n", e.what());
		return 2;
	} catch (const DomainError& e) {
		std::fprintf(stderr, "error: domain: %s\n", e.what());
		return 3;
	} catch (const SimulationError& e) {
		std::fprintf(stderr, "error: simulation: %s\n", e.what());
		return 4;
	} catch (const std::exception& e) {
		std::fprintf(stderr, "error: %s\n", e.what());
		return 1;
	}
	return 0;
}

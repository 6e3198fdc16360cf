#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "support.hpp"

using namespace outersync;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
	std::ifstream in(p);
	std::stringstream ss;
	ss << in.rdbuf();
	return ss.str();
}

json load_json(const fs::path& p) { return json::parse(slurp(p)); }

fs::path source(const std::string& rel) { return fs::path(OUTERSYNC_SOURCE_DIR) / rel; }

struct CliResult {
	int status;
	std::string output;
};

CliResult cli(const std::string& args, const std::string& env = {}) {
	const fs::path log = fs::temp_directory_path() / ("outersync_cli_" + std::to_string(std::rand()) + ".log");
	const std::string cmd = env + " " + std::string(OUTERSYNC_CLI) + " " + args + " > " + log.string() + " 2>&1";
	const int raw = std::system(cmd.c_str());
	CliResult r{WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(log)};
	fs::remove(log);
	return r;
}

fs::path scratch(const std::string& name) {
	const fs::path p = fs::temp_directory_path() / "outersync_tests" / name;
	fs::remove_all(p);
	return p;
}

} // namespace

TEST(Config, MinimalConfigDefaults) {
	const auto c = config_from_text(R"({"preset": "sec6-5neuron"})");
	EXPECT_EQ(c.integrator.micro_step, 1e-3);
	EXPECT_EQ(c.integrator.crossing_tol, 1e-10);
	EXPECT_EQ(c.horizon, 500.0);
	EXPECT_EQ(c.seed, 1u);
	EXPECT_EQ(c.rule.protocol, Protocol::centralized_structure);
	EXPECT_EQ(c.rule.eps_c, 0.01);
	EXPECT_EQ(c.schedule.type, "poisson");
}

TEST(Config, NegativeGammaNamesField) {
	const std::string text = slurp(source("tests/data/bad_gamma.json"));
	try {
		config_from_text(text, "bad_gamma.json");
		FAIL();
	} catch (const ValidationError& e) {
		EXPECT_EQ(e.path, "modes[0].gamma[1]");
		EXPECT_NE(std::string(e.what()).find("bad_gamma.json:4: modes[0].gamma[1]"), std::string::npos) << e.what();
	}
}

TEST(Config, RejectsUnknownFieldsAndBadValues) {
	auto path_of = [](const std::string& text) {
		try {
			config_from_text(text);
		} catch (const ValidationError& e) {
			return e.path;
		}
		return std::string("<accepted>");
	};
	EXPECT_EQ(path_of(R"({"preset": "sec6-5neuron", "colour": 1})"), "colour");
	EXPECT_EQ(path_of(R"({"preset": "nope"})"), "preset");
	EXPECT_EQ(path_of(R"({"preset": "sec6-5neuron", "rule": {"norm": "l3"}})"), "rule.norm");
	EXPECT_EQ(path_of(R"({"preset": "sec6-5neuron", "rule": {"eps_c": 1.5}})"), "rule.eps_c");
	EXPECT_EQ(path_of(R"({"preset": "sec6-5neuron", "xi": [1, 0, 1, 1, 1]})"), "xi[1]");
	EXPECT_EQ(path_of(R"({"preset": "sec6-5neuron", "integrator": {"micro_step": -1}})"), "integrator.micro_step");
	EXPECT_THROW(config_from_text("{ not json"), ValidationError);
}

TEST(Config, ShippedConfigsLoadAndResolve) {
	for (const auto& entry : fs::directory_iterator(source("configs"))) {
		const auto c = load_config(entry.path().string());
		EXPECT_NO_THROW(resolve(c)) << entry.path();
	}
}

TEST(Config, RoundTripThroughJson) {
	const auto c = load_config(source("configs/two-neuron-inline.json").string());
	const json a = to_json(c);
	const json b = to_json(config_from_json(a));
	EXPECT_EQ(a, b);
}

TEST(Config, InfeasibleWeightsRefused) {
	RunConfig c = preset_config("sec31-2neuron", Protocol::centralized_structure, NormKind::L2, 1);
	c.schedule = ScheduleSpec{"explicit", 1.0, ModeSelection::uniform, 1.0, {0.0}, {1}};
	try {
		resolve(c);
		FAIL();
	} catch (const ValidationError& e) {
		EXPECT_EQ(e.path, "xi");
	}
}

TEST(Presets, Section6Values) {
	const auto p = preset_paper("sec6-5neuron");
	ASSERT_EQ(p.system.modes.size(), 6u);
	EXPECT_EQ(p.system.modes[0].gamma, (Vector{0.8850, 0.9148, 0.8530, 0.7977, 0.8764}));
	EXPECT_EQ(p.system.modes[0].A(0, 0), -1.7919);
	EXPECT_EQ(p.eps_c, 0.01);
	EXPECT_EQ(p.eps_d, 0.02);
	EXPECT_EQ(p.alpha, 0.2);
	EXPECT_EQ(p.beta, Vector(5, 1.0));
	EXPECT_EQ(p.window, 500.0);
	EXPECT_EQ(p.system.horizon(), 500.0);
}

TEST(Presets, Section31Values) {
	const auto p = preset_paper("sec31-2neuron");
	ASSERT_EQ(p.system.modes.size(), 2u);
	EXPECT_EQ(p.system.modes[0].A, Matrix::from_rows({{1.0235, 0.2538}, {0.5014, -0.1526}}));
	EXPECT_EQ(p.system.modes[1].A, Matrix::from_rows({{-0.3253, 0.4384}, {-2.0341, -0.1526}}));
	EXPECT_EQ(p.system.gains(), (Vector{1.0017, 0.9984}));
	EXPECT_THROW(preset_paper("sec7"), ValidationError);
}

TEST(Presets, MatchShippedFiles) {
	for (const auto& name : preset_names()) {
		const auto shipped = load_config(source("data/presets/" + name + ".json").string());
		const auto p = preset_paper(name);
		EXPECT_EQ(shipped.modes, p.system.modes) << name;
		EXPECT_EQ(shipped.activation, p.system.activation) << name;
		const auto sys = build_system(shipped);
		EXPECT_EQ(sys.schedule, p.system.schedule) << name;
	}
	const json th = load_json(source("data/presets/sec6-thresholds.json"));
	EXPECT_EQ(th["centralized"], to_json(sec6_phi()));
	EXPECT_EQ(th["decentralized"], to_json(sec6_psi()));
}

TEST(Presets, ChecksumOfSection6Coefficients) {
	double sum = 0.0, abs_sum = 0.0;
	for (const auto& m : preset_paper("sec6-5neuron").system.modes) {
		for (double x : m.gamma) sum += x, abs_sum += std::abs(x);
		for (double x : m.A.data()) sum += x, abs_sum += std::abs(x);
		for (double x : m.I) sum += x, abs_sum += std::abs(x);
	}
	const auto shipped = load_config(source("data/presets/sec6-5neuron.json").string());
	double s2 = 0.0;
	for (const auto& m : shipped.modes) {
		for (double x : m.gamma) s2 += x;
		for (double x : m.A.data()) s2 += x;
		for (double x : m.I) s2 += x;
	}
	EXPECT_EQ(sum, s2);
	EXPECT_GT(abs_sum, 100.0);
}

TEST(Output, CsvHeaderGolden) {
	std::string joined;
	for (const auto& h : csv_header(5))
		joined += (joined.empty() ? "" : ",") + h;
	EXPECT_EQ(joined,
	          "t,u_1,u_2,u_3,u_4,u_5,v_1,v_2,v_3,v_4,v_5,w_norm_l1,w_norm_l2,w_norm_linf,event_flag,event_neuron");
}

TEST(Output, CsvCarriesConfigAndMergesEvents) {
	auto c = preset_config("sec6-5neuron", Protocol::decentralized_structure, NormKind::L1, 3, 2.0);
	const auto r = resolve(c);
	auto tr = simulate(r.system, r.rule, r.xi, r.u0, r.v0, r.integrator);
	tr.config_echo = to_json(c).dump();
	std::ostringstream out;
	write_csv(out, tr);
	std::istringstream in(out.str());
	std::string line;
	std::getline(in, line);
	ASSERT_EQ(line.rfind("# config: ", 0), 0u);
	EXPECT_EQ(json::parse(line.substr(10)), to_json(c));
	std::getline(in, line);
	EXPECT_EQ(line.rfind("t,u_1", 0), 0u);
	double prev = -1.0;
	std::size_t rows = 0, events = 0;
	while (std::getline(in, line)) {
		std::vector<std::string> cells;
		std::stringstream ls(line);
		for (std::string cell; std::getline(ls, cell, ',');)
			cells.push_back(cell);
		ASSERT_EQ(cells.size(), 16u);
		const double t = std::stod(cells[0]);
		EXPECT_GE(t, prev);
		prev = t;
		events += cells[14] != "0";
		++rows;
	}
	EXPECT_EQ(rows, tr.snapshots.size() + tr.events.size());
	EXPECT_EQ(events, tr.events.size());
}

TEST(Output, SummaryFieldNamesStable) {
	auto c = preset_config("sec6-5neuron", Protocol::centralized_state, NormKind::L2, 2, 20.0);
	const auto r = resolve(c);
	auto tr = simulate(r.system, r.rule, r.xi, r.u0, r.v0, r.integrator);
	tr.config_echo = to_json(c).dump();
	const json s = summary_json(tr, r.system, r.feasibility);
	std::vector<std::string> keys;
	for (const auto& [k, v] : s.items())
		keys.push_back(k);
	EXPECT_EQ(keys, (std::vector<std::string>{"config", "protocol", "norm", "xi", "bounds", "feasibility", "horizon",
	                                          "events", "mode_switches", "initial_norms", "final_norms", "rate_fit",
	                                          "diagnostics"}));
	EXPECT_EQ(s["config"], to_json(c));
	std::vector<std::string> checks;
	for (const auto& d : s["diagnostics"])
		checks.push_back(d["check"]);
	EXPECT_EQ(checks, (std::vector<std::string>{"contraction", "hold-nonnegativity", "threshold-containment",
	                                            "gronwall-envelope"}));
}

TEST(Cli, SimulateWritesArtifacts) {
	const fs::path dir = scratch("simulate");
	const auto r = cli("simulate --preset sec6-5neuron --rule centralized-structure --norm l1 --seed 7 --horizon 50 --out " +
	                   dir.string());
	ASSERT_EQ(r.status, 0) << r.output;
	std::ifstream csv(dir / "centralized-structure_l1.csv");
	std::string first, header;
	std::getline(csv, first);
	std::getline(csv, header);
	EXPECT_EQ(first.rfind("# config: ", 0), 0u);
	EXPECT_EQ(json::parse(first.substr(10))["seed"], 7);
	EXPECT_EQ(header,
	          "t,u_1,u_2,u_3,u_4,u_5,v_1,v_2,v_3,v_4,v_5,w_norm_l1,w_norm_l2,w_norm_linf,event_flag,event_neuron");
	const json s = load_json(dir / "centralized-structure_l1.summary.json");
	EXPECT_EQ(s["config"]["seed"], 7);
	EXPECT_TRUE(fs::exists(dir / "centralized-structure_l1.gp"));
	EXPECT_NE(slurp(dir / "centralized-structure_l1.gp").find("# config: "), std::string::npos);
}

TEST(Cli, EnvironmentOverridesOut) {
	const fs::path dir = scratch("env");
	const fs::path ignored = scratch("ignored");
	const auto r = cli("simulate --horizon 5 --no-plot --out " + ignored.string(), "OUTERSYNC_OUT=" + dir.string());
	ASSERT_EQ(r.status, 0) << r.output;
	EXPECT_TRUE(fs::exists(dir / "centralized-structure_l1.csv"));
	EXPECT_FALSE(fs::exists(ignored));
}

TEST(Cli, FeasibilityReportsCertificate) {
	const fs::path dir = scratch("feasibility");
	const auto r = cli("feasibility --preset sec31-2neuron --interval 2 --norm l2 --out " + dir.string());
	ASSERT_EQ(r.status, 0) << r.output;
	const json doc = load_json(dir / "feasibility.json");
	ASSERT_TRUE(doc.contains("config"));
	const json& rep = doc["reports"][0];
	EXPECT_EQ(rep["status"], "infeasible");
	EXPECT_FALSE(rep["certificate"].is_null());
}

TEST(Cli, BadConfigExitsWithFieldPath) {
	const auto r = cli("simulate --config " + source("tests/data/bad_gamma.json").string() + " --out " +
	                   scratch("bad").string());
	EXPECT_EQ(r.status, 2);
	EXPECT_NE(r.output.find("modes[0].gamma[1]"), std::string::npos) << r.output;
}

TEST(Cli, UnknownSubcommandFails) { EXPECT_NE(cli("frobnicate").status, 0); }

TEST(Cli, ReproduceDeterministic) {
	const fs::path a = scratch("rep_a"), b = scratch("rep_b");
	ASSERT_EQ(cli("reproduce --seed 5 --horizon 60 --out " + a.string()).status, 0);
	ASSERT_EQ(cli("reproduce --seed 5 --horizon 60 --out " + b.string()).status, 0);
	json doc = load_json(a / "reproduce.json"), other = load_json(b / "reproduce.json");
	EXPECT_EQ(doc["config"]["output"], a.string());
	doc["config"].erase("output");
	other["config"].erase("output");
	EXPECT_EQ(doc.dump(), other.dump());
	const auto body = [](const fs::path& f) {
		const std::string text = slurp(f);
		return text.substr(text.find('\n') + 1);
	};
	EXPECT_EQ(body(a / "reproduce_log_error_l1.csv"), body(b / "reproduce_log_error_l1.csv"));
	EXPECT_EQ(doc["config"]["seed"], 5);
	EXPECT_EQ(doc["norms"].size(), 3u);
}

TEST(Cli, ScheduleMatchesLibrary) {
	const fs::path dir = scratch("schedule");
	ASSERT_EQ(cli("schedule --lambda 2 --horizon 30 --modes 4 --seed 9 --out " + dir.string()).status, 0);
	const json doc = load_json(dir / "schedule.json");
	const auto s = poisson_schedule(2.0, 30.0, 4, 9);
	EXPECT_EQ(doc["breakpoints"].get<std::vector<double>>(), s.breakpoints);
	EXPECT_EQ(doc["mode_index"].get<std::vector<std::size_t>>(), s.mode_index);
}

#pragma once

// Trace export: CSV, JSON summaries, diagnostic reports, gnuplot script.
// Every artifact carries the run config.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "analysis.hpp"
#include "config.hpp"
#include "diagnostics.hpp"
#include "trace.hpp"

namespace outersync {

// Column order is part of the interface.
inline std::vector<std::string> csv_header(std::size_t n) {
	std::vector<std::string> h{"t"};
	for (std::size_t i = 1; i <= n; ++i)
		h.push_back("u_" + std::to_string(i));
	for (std::size_t i = 1; i <= n; ++i)
		h.push_back("v_" + std::to_string(i));
	for (const char* c : {"w_norm_l1", "w_norm_l2", "w_norm_linf", "event_flag", "event_neuron"})
		h.emplace_back(c);
	return h;
}

// Rows are snapshots (event_flag 0) and events merged in time order; events
// at a snapshot time come first. event_flag: 1 trigger, 2 mode switch.
// event_neuron is 1-based, 0 for centralized triggers and non-events.
inline void write_csv(std::ostream& out, const SimulationTrace& trace) {
	const std::size_t n = trace.n;
	out << "# config: " << (trace.config_echo.empty() ? "{}" : trace.config_echo) << '\n';
	const auto header = csv_header(n);
	for (std::size_t k = 0; k < header.size(); ++k)
		out << (k ? "," : "") << header[k];
	out << '\n';
	out << std::setprecision(17);

	auto row = [&](double t, const Vector& u, const Vector& w, int flag, int neuron) {
		out << t;
		for (double x : u)
			out << ',' << x;
		for (std::size_t i = 0; i < n; ++i)
			out << ',' << u[i] - w[i];
		for (NormKind k : all_norms)
			out << ',' << weighted_norm(w, trace.xi, k);
		out << ',' << flag << ',' << neuron << '\n';
	};

	std::size_t e = 0;
	for (const auto& snap : trace.snapshots) {
		for (; e < trace.events.size() && trace.events[e].t <= snap.t; ++e) {
			const auto& ev = trace.events[e];
			row(ev.t, ev.u, ev.w, ev.is_trigger() ? 1 : 2, ev.neuron + 1);
		}
		row(snap.t, snap.u, snap.w, 0, 0);
	}
	for (; e < trace.events.size(); ++e) {
		const auto& ev = trace.events[e];
		row(ev.t, ev.u, ev.w, ev.is_trigger() ? 1 : 2, ev.neuron + 1);
	}
}

inline json to_json(const Report& r) {
	auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
	return json{{"check", r.check},
	            {"status", to_string(r.status)},
	            {"worst_value", num(r.worst_value)},
	            {"threshold", num(r.threshold)},
	            {"locations", r.locations},
	            {"detail", r.detail}};
}

inline json to_json(const BoundSet& b) {
	return json{{"norm", to_string(b.kind)}, {"M", b.M}, {"N", b.N}, {"Lambda", b.Lambda}, {"eps0", b.eps0}};
}

inline json to_json(const EventStats& s) {
	auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
	return json{{"trigger_count", s.trigger_count},
	            {"per_neuron_counts", s.per_neuron_counts},
	            {"mean_per_neuron", s.mean_per_neuron()},
	            {"min_gap", s.min_gap},
	            {"mean_gap", s.mean_gap},
	            {"max_gap", s.max_gap},
	            {"theoretical_lower_bound", s.theoretical_lower_bound},
	            {"theoretical_upper_bound", num(s.theoretical_upper_bound)},
	            {"bound_respected", s.bound_respected}};
}

inline json to_json(const FeasibilityResult& f) {
	auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
	json j{{"norm", to_string(f.kind)},
	       {"eps0_target", f.eps0_target},
	       {"status", to_string(f.status)},
	       {"xi", f.xi ? json(f.xi->values()) : json(nullptr)},
	       {"certificate", f.certificate.empty() ? json(nullptr) : json(f.certificate)},
	       {"perron_lower", num(f.perron_lower)},
	       {"perron_upper", num(f.perron_upper)},
	       {"diagonal_margin", num(f.diagonal_margin)},
	       {"min_mu", num(f.min_mu)},
	       {"iterations", f.iterations}};
	if (f.certificate == "diagonal")
		j["failing"] = json{{"mode", f.failing_mode}, {"neuron", f.failing_neuron}};
	return j;
}

// Diagnostics that apply to the trace's protocol.
inline std::vector<Report> standard_reports(const SimulationTrace& trace, const SwitchingSystem& system) {
	std::vector<Report> out;
	out.push_back(contraction_check(trace, trace.xi, trace.norm, trace.rule.margin()));
	out.push_back(hold_nonnegativity_check(trace, system));
	out.push_back(containment_check(trace));
	out.push_back(envelope_check(trace, system, trace.xi, trace.norm, trace.rule.thresholds, trace.bounds));
	return out;
}

inline json summary_json(const SimulationTrace& trace, const SwitchingSystem& system,
                         const std::optional<FeasibilityResult>& feasibility = std::nullopt) {
	json j;
	j["config"] = trace.config_echo.empty() ? json::object() : json::parse(trace.config_echo);
	j["protocol"] = to_string(trace.protocol);
	j["norm"] = to_string(trace.norm);
	j["xi"] = trace.xi.values();
	j["bounds"] = to_json(trace.bounds);
	if (feasibility)
		j["feasibility"] = to_json(*feasibility);
	j["horizon"] = trace.horizon;
	j["events"] = to_json(zeno_check(trace, trace.bounds, trace.rule));
	std::size_t switches = 0;
	for (const auto& e : trace.events)
		switches += e.kind == EventKind::mode_switch ? 1 : 0;
	j["mode_switches"] = switches;
	json initial, final_norms;
	for (NormKind k : all_norms) {
		initial[to_string(k)] = weighted_norm(trace.snapshots.front().w, trace.xi, k);
		final_norms[to_string(k)] = weighted_norm(trace.snapshots.back().w, trace.xi, k);
	}
	j["initial_norms"] = initial;
	j["final_norms"] = final_norms;
	try {
		const RateFit f = rate_fit(sync_error_series(trace, trace.xi, trace.norm));
		j["rate_fit"] = json{{"rate", f.rate}, {"r_squared", f.r_squared}, {"points", f.points}};
	} catch (const DomainError&) {
		j["rate_fit"] = nullptr;
	}
	json reports = json::array();
	for (const auto& r : standard_reports(trace, system))
		reports.push_back(to_json(r));
	j["diagnostics"] = reports;
	if (trace.oracle_max_deviation > 0.0)
		j["oracle_max_deviation"] = trace.oracle_max_deviation;
	return j;
}

// gnuplot script for the log sync error of a trace CSV.
inline std::string plot_script(const std::string& csv_name, std::size_t n, const std::string& config_echo) {
	const std::size_t col_l1 = 2 + 2 * n;
	std::ostringstream s;
	s << "# config: " << config_echo << '\n'
	  << "set datafile separator ','\n"
	  << "set datafile commentschars '#'\n"
	  << "set key autotitle columnhead\n"
	  << "set xlabel 't'\n"
	  << "set ylabel 'log ||u - v||'\n"
	  << "set term pngcairo size 900,600\n"
	  << "set output '" << csv_name.substr(0, csv_name.rfind('.')) << ".png'\n"
	  << "plot '" << csv_name << "' using 1:(($" << col_l1 + 3 << "==0 && $" << col_l1
	  << ">0) ? log($" << col_l1 << ") : 1/0) with lines title 'l1', \\\n"
	  << "     '' using 1:(($" << col_l1 + 3 << "==0 && $" << col_l1 + 1 << ">0) ? log($" << col_l1 + 1
	  << ") : 1/0) with lines title 'l2', \\\n"
	  << "     '' using 1:(($" << col_l1 + 3 << "==0 && $" << col_l1 + 2 << ">0) ? log($" << col_l1 + 2
	  << ") : 1/0) with lines title 'linf'\n";
	return s.str();
}

// $OUTERSYNC_OUT wins over the requested directory.
inline std::filesystem::path output_dir(const std::string& requested) {
	if (const char* env = std::getenv("OUTERSYNC_OUT"); env && *env)
		return env;
	return requested;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
	if (path.has_parent_path())
		std::filesystem::create_directories(path.parent_path());
	std::ofstream out(path);
	if (!out)
		throw SimulationError("cannot write " + path.string());
	out << text;
}

} // namespace outersync

#pragma once

// Run configuration: JSON schema, validation with field paths, resolution
// into a runnable system/rule/weights/initial-state bundle.
//
// {
//   "preset": "sec6-5neuron",            // or "system": {...}
//   "system": {
//     "modes": [{"gamma": [...], "A": [[...], ...], "I": [...]}, ...],
//     "activation": {"kind": "sigmoid" | "piecewise-linear" | "custom-table",
//                    "gains": [...], "lower": x, "upper": x,
//                    "table_x": [...], "table_y": [[...], ...]}
//   },
//   "schedule": {"type": "poisson", "lambda": 1, "selection": "uniform"}
//             | {"type": "periodic", "period": 1}
//             | {"type": "explicit", "breakpoints": [...], "modes": [...]},
//   "horizon": 500,
//   "seed": 7,
//   "rule": {"protocol": "centralized-structure", "norm": "l1",
//            "eps_c": 0.01, "eps_d": 0.02, "eps0": 0.03,
//            "thresholds": "sec6-thresholds"
//                        | {"layout": "global", "phi": F}
//                        | {"layout": "per-neuron", "psi": [F, ...]}
//                        | {"layout": "adaptive", "alpha": 0.2, "beta": [...], "window": 500}},
//            F = {"family": "rational-decay", "c", "a", "b", "p"}
//              | {"family": "exp-gamma", "s", "r", "q", "d"}
//   "xi": [...]  |  {"solve": true, "eps0_target": 0.03},
//   "initial": {"u0": [...], "v0": [...]}  |  {"uniform": [-1, 1]},
//   "integrator": {"micro_step": 1e-3, "crossing_tol": 1e-10, "snapshot_interval": 0.1,
//                  "oracle_mode": false, "allow_invalid_rule": false},
//   "output": "out"
// }

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "analysis.hpp"
#include "engine.hpp"
#include "errors.hpp"
#include "model.hpp"
#include "presets.hpp"
#include "triggers.hpp"

namespace outersync {

using json = nlohmann::ordered_json;

struct ScheduleSpec {
	std::string type = "poisson"; // poisson | periodic | explicit | constant
	double lambda = 1.0;
	ModeSelection selection = ModeSelection::uniform;
	double period = 1.0;
	std::vector<double> breakpoints;
	std::vector<std::size_t> modes;
};

struct XiSpec {
	std::optional<Vector> explicit_xi;
	std::optional<double> solve_eps0;
};

struct InitialSpec {
	std::optional<Vector> u0;
	std::optional<Vector> v0;
	double lo = -1.0;
	double hi = 1.0;
};

struct RunConfig {
	std::string preset;                  // empty: inline system
	std::vector<Mode> modes;             // inline system only
	ActivationSpec activation;           // inline system only
	ScheduleSpec schedule;
	double horizon = 500.0;
	std::uint64_t seed = 1;
	TriggerRule rule;
	std::string threshold_preset;        // "sec6-thresholds" or empty
	XiSpec xi;
	InitialSpec initial;
	IntegratorConfig integrator;
	std::string output = "out";
};

// Everything simulate() needs.
struct ResolvedRun {
	SwitchingSystem system;
	TriggerRule rule;
	Weights xi;
	std::optional<FeasibilityResult> feasibility;
	Vector u0;
	Vector v0;
	IntegratorConfig integrator;
};

// ---------------------------------------------------------------------------
// JSON <-> types
// ---------------------------------------------------------------------------

inline json to_json(const ThresholdFunction& f) {
	if (f.family == ThresholdFamily::rational_decay)
		return json{{"family", "rational-decay"}, {"c", f.c}, {"a", f.a}, {"b", f.b}, {"p", f.p}};
	return json{{"family", "exp-gamma"}, {"s", f.s}, {"r", f.r}, {"q", f.q}, {"d", f.d}};
}

inline json to_json(const ThresholdSpec& t) {
	switch (t.layout) {
	case ThresholdSpec::Layout::none: return nullptr;
	case ThresholdSpec::Layout::global: return json{{"layout", "global"}, {"phi", to_json(t.global)}};
	case ThresholdSpec::Layout::per_neuron: {
		json arr = json::array();
		for (const auto& f : t.per_neuron)
			arr.push_back(to_json(f));
		return json{{"layout", "per-neuron"}, {"psi", arr}};
	}
	case ThresholdSpec::Layout::adaptive:
		return json{{"layout", "adaptive"},
		            {"alpha", t.adaptive.alpha},
		            {"beta", t.adaptive.beta},
		            {"window", t.adaptive.window}};
	}
	return nullptr;
}

inline json to_json(const TriggerRule& r) {
	return json{{"protocol", to_string(r.protocol)}, {"norm", to_string(r.norm)}, {"eps_c", r.eps_c},
	            {"eps_d", r.eps_d},                  {"eps0", r.eps0},            {"thresholds", to_json(r.thresholds)}};
}

inline json to_json(const Mode& m) {
	json a = json::array();
	for (std::size_t i = 0; i < m.size(); ++i) {
		auto row = m.A.row(i);
		a.push_back(Vector(row.begin(), row.end()));
	}
	return json{{"gamma", m.gamma}, {"A", a}, {"I", m.I}};
}

inline json to_json(const ActivationSpec& a) {
	json j{{"kind", to_string(a.kind)}, {"gains", a.gains}};
	if (a.kind == ActivationKind::piecewise_linear) {
		j["lower"] = std::isfinite(a.lower) ? json(a.lower) : json(nullptr);
		j["upper"] = std::isfinite(a.upper) ? json(a.upper) : json(nullptr);
	}
	if (a.kind == ActivationKind::custom_table) {
		j["table_x"] = a.table_x;
		j["table_y"] = a.table_y;
	}
	return j;
}

inline json to_json(const ScheduleSpec& s) {
	if (s.type == "poisson")
		return json{{"type", "poisson"},
		            {"lambda", s.lambda},
		            {"selection", s.selection == ModeSelection::uniform ? "uniform" : "cyclic"}};
	if (s.type == "periodic")
		return json{{"type", "periodic"}, {"period", s.period}};
	if (s.type == "explicit")
		return json{{"type", "explicit"}, {"breakpoints", s.breakpoints}, {"modes", s.modes}};
	return json{{"type", s.type}};
}

inline json to_json(const IntegratorConfig& c) {
	return json{{"micro_step", c.micro_step},
	            {"crossing_tol", c.crossing_tol},
	            {"snapshot_interval", c.snapshot_interval},
	            {"oracle_mode", c.oracle_mode},
	            {"allow_invalid_rule", c.allow_invalid_rule}};
}

inline json to_json(const RunConfig& c) {
	json j;
	if (!c.preset.empty()) {
		j["preset"] = c.preset;
	} else {
		json modes = json::array();
		for (const auto& m : c.modes)
			modes.push_back(to_json(m));
		j["system"] = json{{"modes", modes}, {"activation", to_json(c.activation)}};
	}
	j["schedule"] = to_json(c.schedule);
	j["horizon"] = c.horizon;
	j["seed"] = c.seed;
	json rule = to_json(c.rule);
	if (!c.threshold_preset.empty())
		rule["thresholds"] = c.threshold_preset;
	j["rule"] = rule;
	if (c.xi.explicit_xi)
		j["xi"] = *c.xi.explicit_xi;
	else
		j["xi"] = json{{"solve", true}, {"eps0_target", c.xi.solve_eps0.value_or(c.rule.eps0)}};
	if (c.initial.u0 && c.initial.v0)
		j["initial"] = json{{"u0", *c.initial.u0}, {"v0", *c.initial.v0}};
	else
		j["initial"] = json{{"uniform", {c.initial.lo, c.initial.hi}}};
	j["integrator"] = to_json(c.integrator);
	j["output"] = c.output;
	return j;
}

namespace detail {

inline std::string join(const std::string& base, const std::string& key) {
	return base.empty() ? key : base + "." + key;
}
inline std::string idx(const std::string& base, std::size_t i) {
	return base + "[" + std::to_string(i) + "]";
}

inline double get_number(const json& j, const std::string& path) {
	if (!j.is_number())
		throw ValidationError("expected a number", path);
	return j.get<double>();
}

inline Vector get_vector(const json& j, const std::string& path) {
	if (!j.is_array())
		throw ValidationError("expected an array of numbers", path);
	Vector v;
	for (std::size_t i = 0; i < j.size(); ++i)
		v.push_back(get_number(j[i], idx(path, i)));
	return v;
}

inline Matrix get_matrix(const json& j, const std::string& path) {
	if (!j.is_array())
		throw ValidationError("expected an array of rows", path);
	std::vector<Vector> rows;
	for (std::size_t i = 0; i < j.size(); ++i) {
		rows.push_back(get_vector(j[i], idx(path, i)));
		if (rows.back().size() != j.size())
			throw ValidationError("matrix must be square", idx(path, i));
	}
	return Matrix::from_rows(rows);
}

inline const json* find(const json& j, const char* key) {
	auto it = j.find(key);
	return it == j.end() ? nullptr : &*it;
}

inline double number_or(const json& j, const char* key, double fallback, const std::string& base) {
	const json* v = find(j, key);
	return v ? get_number(*v, join(base, key)) : fallback;
}

inline void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& base) {
	for (auto it = j.begin(); it != j.end(); ++it) {
		bool ok = false;
		for (const char* k : known)
			ok = ok || it.key() == k;
		if (!ok)
			throw ValidationError("unknown field", join(base, it.key()));
	}
}

inline ThresholdFunction parse_threshold_function(const json& j, const std::string& path) {
	if (!j.is_object())
		throw ValidationError("expected a threshold object", path);
	const std::string family = j.value("family", "rational-decay");
	ThresholdFunction f;
	if (family == "rational-decay") {
		reject_unknown(j, {"family", "c", "a", "b", "p"}, path);
		f = ThresholdFunction::rational(number_or(j, "c", 1.0, path), number_or(j, "a", 1.0, path),
		                                number_or(j, "b", 1.0, path), number_or(j, "p", 1.0, path));
	} else if (family == "exp-gamma") {
		reject_unknown(j, {"family", "s", "r", "q", "d"}, path);
		f = ThresholdFunction::exp_gamma(number_or(j, "s", 1.0, path), number_or(j, "r", 1.0, path),
		                                 number_or(j, "q", 0.0, path), number_or(j, "d", 1.0, path));
	} else {
		throw ValidationError("unknown threshold family '" + family + "'", join(path, "family"));
	}
	f.validate(path);
	return f;
}

inline ThresholdSpec parse_thresholds(const json& j, const std::string& path, std::string& preset_name) {
	if (j.is_null())
		return {};
	if (j.is_string()) {
		preset_name = j.get<std::string>();
		if (preset_name != "sec6-thresholds")
			throw ValidationError("unknown threshold preset '" + preset_name + "'", path);
		return {};
	}
	if (!j.is_object())
		throw ValidationError("expected a threshold preset name or object", path);
	const std::string layout = j.value("layout", "");
	if (layout == "global") {
		reject_unknown(j, {"layout", "phi"}, path);
		const json* phi = find(j, "phi");
		if (!phi)
			throw ValidationError("missing field", join(path, "phi"));
		return ThresholdSpec::make_global(parse_threshold_function(*phi, join(path, "phi")));
	}
	if (layout == "per-neuron") {
		reject_unknown(j, {"layout", "psi"}, path);
		const json* psi = find(j, "psi");
		if (!psi || !psi->is_array())
			throw ValidationError("expected an array", join(path, "psi"));
		std::vector<ThresholdFunction> fs;
		for (std::size_t i = 0; i < psi->size(); ++i)
			fs.push_back(parse_threshold_function((*psi)[i], idx(join(path, "psi"), i)));
		return ThresholdSpec::make_per_neuron(std::move(fs));
	}
	if (layout == "adaptive") {
		reject_unknown(j, {"layout", "alpha", "beta", "window"}, path);
		AdaptiveDelta a;
		a.alpha = number_or(j, "alpha", 0.2, path);
		if (const json* b = find(j, "beta"))
			a.beta = b->is_number() ? Vector{b->get<double>()} : get_vector(*b, join(path, "beta"));
		a.window = number_or(j, "window", 500.0, path);
		return ThresholdSpec::make_adaptive(std::move(a));
	}
	throw ValidationError("layout must be global, per-neuron or adaptive", join(path, "layout"));
}

// 1-based line of the text position reached by following the named keys of
// `path` in order. Array indices are skipped; good enough to point at the
// offending block.
inline std::size_t locate_line(const std::string& text, const std::string& path) {
	std::size_t pos = 0;
	std::size_t start = 0;
	while (start < path.size()) {
		std::size_t end = path.find_first_of(".[", start);
		if (end == std::string::npos)
			end = path.size();
		const std::string key = path.substr(start, end - start);
		if (!key.empty() && key.back() != ']') {
			const std::size_t hit = text.find("\"" + key + "\"", pos);
			if (hit != std::string::npos)
				pos = hit;
		}
		if (end < path.size() && path[end] == '[') {
			const std::size_t close = path.find(']', end);
			end = close == std::string::npos ? path.size() : close + 1;
			if (end < path.size() && path[end] == '.')
				++end;
			start = end;
			continue;
		}
		start = end + 1;
	}
	return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

} // namespace detail

// Parse and validate; paths in errors are relative to the document root.
inline RunConfig config_from_json(const json& j) {
	using namespace detail;
	if (!j.is_object())
		throw ValidationError("config must be a JSON object", "");
	reject_unknown(j, {"preset", "system", "schedule", "horizon", "seed", "rule", "xi", "initial", "integrator", "output"}, "");
	RunConfig c;

	if (const json* p = find(j, "preset")) {
		if (!p->is_string())
			throw ValidationError("expected a preset name", "preset");
		c.preset = p->get<std::string>();
		bool known = false;
		for (const auto& name : preset_names())
			known = known || name == c.preset;
		if (!known)
			throw ValidationError("unknown preset '" + c.preset + "'", "preset");
		if (find(j, "system"))
			throw ValidationError("give either preset or system, not both", "system");
		if (c.preset == "sec31-2neuron") {
			c.schedule.type = "periodic";
			c.horizon = 10.0;
		}
	} else {
		const json* s = find(j, "system");
		if (!s || !s->is_object())
			throw ValidationError("missing preset or system", "system");
		reject_unknown(*s, {"modes", "activation"}, "system");
		const json* modes = find(*s, "modes");
		if (!modes || !modes->is_array() || modes->empty())
			throw ValidationError("expected a non-empty array of modes", "modes");
		for (std::size_t m = 0; m < modes->size(); ++m) {
			const std::string path = idx("modes", m);
			const json& mj = (*modes)[m];
			if (!mj.is_object())
				throw ValidationError("expected a mode object", path);
			reject_unknown(mj, {"gamma", "A", "I"}, path);
			Mode mode;
			if (!find(mj, "gamma")) throw ValidationError("missing field", join(path, "gamma"));
			if (!find(mj, "A")) throw ValidationError("missing field", join(path, "A"));
			mode.gamma = get_vector(mj["gamma"], join(path, "gamma"));
			mode.A = get_matrix(mj["A"], join(path, "A"));
			mode.I = find(mj, "I") ? get_vector(mj["I"], join(path, "I")) : Vector(mode.gamma.size(), 0.0);
			mode.validate(path);
			if (!c.modes.empty() && mode.size() != c.modes.front().size())
				throw ValidationError("all modes must share the neuron count", path);
			c.modes.push_back(std::move(mode));
		}
		const std::size_t n = c.modes.front().size();
		const json* act = find(*s, "activation");
		if (!act) {
			c.activation = ActivationSpec::sigmoid(n);
		} else {
			const std::string path = "activation";
			if (!act->is_object())
				throw ValidationError("expected an activation object", path);
			reject_unknown(*act, {"kind", "gains", "lower", "upper", "table_x", "table_y"}, path);
			const std::string kind = act->value("kind", "sigmoid");
			if (kind == "sigmoid") {
				c.activation = ActivationSpec::sigmoid(n);
			} else if (kind == "piecewise-linear") {
				const json* g = find(*act, "gains");
				if (!g) throw ValidationError("missing field", join(path, "gains"));
				auto bound = [&](const char* key, double fallback) {
					const json* b = find(*act, key);
					return b && !b->is_null() ? get_number(*b, join(path, key)) : fallback;
				};
				c.activation = ActivationSpec::piecewise_linear(get_vector(*g, join(path, "gains")),
				                                                bound("lower", -std::numeric_limits<double>::infinity()),
				                                                bound("upper", std::numeric_limits<double>::infinity()));
			} else if (kind == "custom-table") {
				const json* g = find(*act, "gains");
				const json* tx = find(*act, "table_x");
				const json* ty = find(*act, "table_y");
				if (!g || !tx || !ty)
					throw ValidationError("custom-table needs gains, table_x and table_y", path);
				std::vector<Vector> ys;
				if (!ty->is_array())
					throw ValidationError("expected an array of rows", join(path, "table_y"));
				for (std::size_t i = 0; i < ty->size(); ++i)
					ys.push_back(get_vector((*ty)[i], idx(join(path, "table_y"), i)));
				c.activation = ActivationSpec::custom_table(get_vector(*tx, join(path, "table_x")), std::move(ys),
				                                            get_vector(*g, join(path, "gains")));
			} else {
				throw ValidationError("unknown activation kind '" + kind + "'", join(path, "kind"));
			}
			if (c.activation.size() != n)
				throw ValidationError("one gain per neuron required", join(path, "gains"));
		}
	}

	if (const json* h = find(j, "horizon")) {
		c.horizon = get_number(*h, "horizon");
		if (!(c.horizon > 0.0))
			throw ValidationError("horizon must be positive", "horizon");
	}
	if (const json* s = find(j, "seed")) {
		if (!s->is_number_unsigned())
			throw ValidationError("seed must be a non-negative integer", "seed");
		c.seed = s->get<std::uint64_t>();
	}

	if (const json* s = find(j, "schedule")) {
		if (!s->is_object())
			throw ValidationError("expected a schedule object", "schedule");
		reject_unknown(*s, {"type", "lambda", "selection", "period", "breakpoints", "modes"}, "schedule");
		c.schedule.type = s->value("type", "poisson");
		if (c.schedule.type == "poisson") {
			c.schedule.lambda = number_or(*s, "lambda", 1.0, "schedule");
			if (!(c.schedule.lambda > 0.0))
				throw ValidationError("lambda must be positive", "schedule.lambda");
			const std::string sel = s->value("selection", "uniform");
			if (sel != "uniform" && sel != "cyclic")
				throw ValidationError("selection must be uniform or cyclic", "schedule.selection");
			c.schedule.selection = sel == "uniform" ? ModeSelection::uniform : ModeSelection::cyclic;
		} else if (c.schedule.type == "periodic") {
			c.schedule.period = number_or(*s, "period", 1.0, "schedule");
			if (!(c.schedule.period > 0.0))
				throw ValidationError("period must be positive", "schedule.period");
		} else if (c.schedule.type == "explicit") {
			const json* b = find(*s, "breakpoints");
			const json* m = find(*s, "modes");
			if (!b || !m)
				throw ValidationError("explicit schedule needs breakpoints and modes", "schedule");
			c.schedule.breakpoints = get_vector(*b, "schedule.breakpoints");
			if (!m->is_array())
				throw ValidationError("expected an array of mode indices", "schedule.modes");
			for (std::size_t i = 0; i < m->size(); ++i) {
				if (!(*m)[i].is_number_unsigned())
					throw ValidationError("mode index must be a non-negative integer", idx("schedule.modes", i));
				c.schedule.modes.push_back((*m)[i].get<std::size_t>());
			}
		} else if (c.schedule.type != "constant") {
			throw ValidationError("type must be poisson, periodic, explicit or constant", "schedule.type");
		}
	}

	if (const json* r = find(j, "rule")) {
		if (!r->is_object())
			throw ValidationError("expected a rule object", "rule");
		reject_unknown(*r, {"protocol", "norm", "eps_c", "eps_d", "eps0", "thresholds"}, "rule");
		const std::string protocol = r->value("protocol", "centralized-structure");
		const std::string norm = r->value("norm", "l1");
		try {
			c.rule.protocol = parse_protocol(protocol);
		} catch (const ValidationError&) {
			throw ValidationError("unknown protocol '" + protocol + "'", "rule.protocol");
		}
		try {
			c.rule.norm = parse_norm(norm);
		} catch (const ValidationError&) {
			throw ValidationError("unknown norm '" + norm + "' (expected l1, l2 or linf)", "rule.norm");
		}
		c.rule.eps_c = number_or(*r, "eps_c", c.rule.eps_c, "rule");
		c.rule.eps_d = number_or(*r, "eps_d", c.rule.eps_d, "rule");
		c.rule.eps0 = number_or(*r, "eps0", c.rule.eps0, "rule");
		if (!(c.rule.eps_c > 0.0 && c.rule.eps_c < 1.0)) throw ValidationError("eps_c must lie in (0,1)", "rule.eps_c");
		if (!(c.rule.eps_d > 0.0 && c.rule.eps_d < 1.0)) throw ValidationError("eps_d must lie in (0,1)", "rule.eps_d");
		if (!(c.rule.eps0 > 0.0)) throw ValidationError("eps0 must be positive", "rule.eps0");
		if (const json* t = find(*r, "thresholds"))
			c.rule.thresholds = parse_thresholds(*t, "rule.thresholds", c.threshold_preset);
	}

	if (const json* x = find(j, "xi")) {
		if (x->is_array()) {
			c.xi.explicit_xi = get_vector(*x, "xi");
			Weights check(*c.xi.explicit_xi);
		} else if (x->is_object()) {
			reject_unknown(*x, {"solve", "eps0_target"}, "xi");
			if (!x->value("solve", true))
				throw ValidationError("give explicit weights or {\"solve\": true}", "xi.solve");
			c.xi.solve_eps0 = number_or(*x, "eps0_target", c.rule.eps0, "xi");
			if (!(*c.xi.solve_eps0 > 0.0))
				throw ValidationError("eps0_target must be positive", "xi.eps0_target");
		} else {
			throw ValidationError("expected an array or {\"solve\": true}", "xi");
		}
	}

	if (const json* init = find(j, "initial")) {
		if (!init->is_object())
			throw ValidationError("expected an initial-state object", "initial");
		reject_unknown(*init, {"u0", "v0", "uniform"}, "initial");
		const json* u0 = find(*init, "u0");
		const json* v0 = find(*init, "v0");
		if (static_cast<bool>(u0) != static_cast<bool>(v0))
			throw ValidationError("give both u0 and v0", u0 ? "initial.v0" : "initial.u0");
		if (u0) {
			c.initial.u0 = get_vector(*u0, "initial.u0");
			c.initial.v0 = get_vector(*v0, "initial.v0");
		}
		if (const json* uni = find(*init, "uniform")) {
			const Vector r = get_vector(*uni, "initial.uniform");
			if (r.size() != 2 || !(r[0] < r[1]))
				throw ValidationError("expected [lo, hi] with lo < hi", "initial.uniform");
			c.initial.lo = r[0];
			c.initial.hi = r[1];
		}
	}

	if (const json* ic = find(j, "integrator")) {
		if (!ic->is_object())
			throw ValidationError("expected an integrator object", "integrator");
		reject_unknown(*ic, {"micro_step", "crossing_tol", "snapshot_interval", "oracle_mode", "allow_invalid_rule"},
		               "integrator");
		c.integrator.micro_step = number_or(*ic, "micro_step", c.integrator.micro_step, "integrator");
		c.integrator.crossing_tol = number_or(*ic, "crossing_tol", c.integrator.crossing_tol, "integrator");
		c.integrator.snapshot_interval = number_or(*ic, "snapshot_interval", c.integrator.snapshot_interval, "integrator");
		c.integrator.oracle_mode = ic->value("oracle_mode", false);
		c.integrator.allow_invalid_rule = ic->value("allow_invalid_rule", false);
		c.integrator.validate();
	}

	if (const json* o = find(j, "output")) {
		if (!o->is_string())
			throw ValidationError("expected a directory name", "output");
		c.output = o->get<std::string>();
	}
	return c;
}

// Parse text; errors carry "<source>:<line>: <field path>: <message>".
inline RunConfig config_from_text(const std::string& text, const std::string& source = "config") {
	json j;
	try {
		j = json::parse(text);
	} catch (const json::parse_error& e) {
		const std::size_t byte = std::min(e.byte, text.size());
		const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n');
		throw ValidationError(source + ":" + std::to_string(line) + ": parse error: " + e.what());
	}
	try {
		return config_from_json(j);
	} catch (const ValidationError& e) {
		const std::size_t line = detail::locate_line(text, e.path);
		ValidationError located(source + ":" + std::to_string(line) + ": " + e.what());
		located.path = e.path;
		throw located;
	}
}

inline RunConfig load_config(const std::string& path) {
	std::ifstream in(path);
	if (!in)
		throw ValidationError("cannot open config file '" + path + "'");
	std::stringstream ss;
	ss << in.rdbuf();
	return config_from_text(ss.str(), path);
}

// ---------------------------------------------------------------------------
// Resolution
// ---------------------------------------------------------------------------

inline SwitchSchedule build_schedule(const ScheduleSpec& s, double horizon, std::size_t n_modes, std::uint64_t seed) {
	if (s.type == "poisson")
		return poisson_schedule(s.lambda, horizon, n_modes, seed, s.selection);
	if (s.type == "periodic")
		return periodic_schedule(s.period, horizon, n_modes);
	if (s.type == "constant")
		return constant_schedule(horizon);
	SwitchSchedule out{s.breakpoints, s.modes, horizon};
	out.validate(n_modes);
	return out;
}

inline SwitchingSystem build_system(const RunConfig& c) {
	SwitchingSystem sys;
	if (!c.preset.empty()) {
		Preset p = preset_paper(c.preset, c.seed, c.horizon);
		sys.modes = std::move(p.system.modes);
		sys.activation = std::move(p.system.activation);
	} else {
		sys.modes = c.modes;
		sys.activation = c.activation;
	}
	sys.schedule = build_schedule(c.schedule, c.horizon, sys.modes.size(), c.seed);
	sys.validate();
	return sys;
}

// Seeded U[lo, hi]^n draws for u0 then v0.
inline std::pair<Vector, Vector> draw_initial(std::size_t n, double lo, double hi, std::uint64_t seed) {
	std::mt19937_64 rng(seed);
	std::uniform_real_distribution<double> dist(lo, hi);
	Vector u(n), v(n);
	for (auto& x : u)
		x = dist(rng);
	for (auto& x : v)
		x = dist(rng);
	return {u, v};
}

inline ResolvedRun resolve(const RunConfig& c) {
	ResolvedRun r;
	r.system = build_system(c);
	const std::size_t n = r.system.n();
	r.rule = c.rule;
	if (c.threshold_preset == "sec6-thresholds") {
		if (n != 5)
			throw ValidationError("sec6-thresholds needs 5 neurons", "rule.thresholds");
		r.rule.thresholds = r.rule.protocol == Protocol::centralized_state ? sec6_phi() : sec6_psi();
	}
	auto& th = r.rule.thresholds;
	if (th.layout == ThresholdSpec::Layout::adaptive) {
		if (th.adaptive.beta.empty())
			th.adaptive.beta.assign(n, 1.0);
		else if (th.adaptive.beta.size() == 1)
			th.adaptive.beta.assign(n, th.adaptive.beta.front());
		th.adaptive.validate(n);
	}
	if (th.layout == ThresholdSpec::Layout::per_neuron && th.per_neuron.size() != n)
		throw ValidationError("one threshold per neuron required", "rule.thresholds.psi");
	if (r.rule.protocol == Protocol::centralized_state && th.layout != ThresholdSpec::Layout::global)
		throw ValidationError("centralized-state needs a global threshold", "rule.thresholds");
	if (r.rule.protocol == Protocol::decentralized_state && th.layout != ThresholdSpec::Layout::per_neuron &&
	    th.layout != ThresholdSpec::Layout::adaptive)
		throw ValidationError("decentralized-state needs per-neuron or adaptive thresholds", "rule.thresholds");

	if (c.xi.explicit_xi) {
		if (c.xi.explicit_xi->size() != n)
			throw ValidationError("one weight per neuron required", "xi");
		r.xi = Weights(*c.xi.explicit_xi);
	} else {
		const double target = c.xi.solve_eps0.value_or(r.rule.eps0);
		FeasibilityResult f = solve_xi(r.system, r.rule.norm, target);
		if (f.status != FeasibilityStatus::feasible || !f.xi) {
			if (!c.integrator.allow_invalid_rule || !f.xi)
				throw ValidationError("no weights reach mu >= " + std::to_string(target) + " for the " +
				                          to_string(r.rule.norm) + " norm (" + to_string(f.status) +
				                          (f.certificate.empty() ? "" : ", certificate " + f.certificate) + ")",
				                      "xi");
		}
		r.xi = *f.xi;
		r.feasibility = std::move(f);
	}

	if (c.initial.u0) {
		if (c.initial.u0->size() != n || c.initial.v0->size() != n)
			throw ValidationError("initial state must have one entry per neuron", "initial");
		r.u0 = *c.initial.u0;
		r.v0 = *c.initial.v0;
	} else {
		std::tie(r.u0, r.v0) = draw_initial(n, c.initial.lo, c.initial.hi, c.seed);
	}
	r.integrator = c.integrator;
	r.integrator.validate();
	return r;
}

// Preset-backed config with the shipped parameters for the given rule.
inline RunConfig preset_config(const std::string& preset, Protocol protocol, NormKind norm, std::uint64_t seed,
                               double horizon = 0.0) {
	RunConfig c;
	c.preset = preset;
	c.seed = seed;
	const Preset p = preset_paper(preset, seed, horizon);
	c.horizon = p.system.horizon();
	if (preset == "sec31-2neuron")
		c.schedule.type = "periodic";
	c.rule.protocol = protocol;
	c.rule.norm = norm;
	c.rule.eps_c = p.eps_c;
	c.rule.eps_d = p.eps_d;
	c.rule.eps0 = p.eps0;
	if (!is_structure(protocol)) {
		if (preset == "sec6-5neuron") {
			c.threshold_preset = "sec6-thresholds";
			c.rule.thresholds = protocol == Protocol::centralized_state ? p.phi : p.psi;
		} else {
			c.rule.thresholds = protocol == Protocol::centralized_state
			                        ? ThresholdSpec::make_global(ThresholdFunction::rational(1.0, 1.0, 1.0, 2.0))
			                        : ThresholdSpec::make_adaptive({p.alpha, p.beta, p.window});
		}
	}
	return c;
}

} // namespace outersync

#pragma once

// Built-in systems: the 5-neuron, 6-mode Hopfield network with Poisson
// switching and the 2-neuron, 2-interval example used for the mu tables.

#include <cstdint>
#include <string>
#include <vector>

#include "errors.hpp"
#include "model.hpp"
#include "triggers.hpp"

namespace outersync {

struct Preset {
	std::string name;
	SwitchingSystem system;
	double lambda = 1.0; // Poisson switching rate (0 for a fixed schedule)
	double alpha = 0.2;
	Vector beta;
	double window = 500.0;
	double eps_c = 0.01;
	double eps_d = 0.02;
	double eps0 = 0.03;
	ThresholdSpec phi; // centralized state threshold
	ThresholdSpec psi; // push-based state thresholds
};

inline const std::vector<std::string>& preset_names() {
	static const std::vector<std::string> names{"sec6-5neuron", "sec31-2neuron"};
	return names;
}

namespace detail {

inline Mode diag_mode(Vector gamma, std::vector<Vector> a, Vector input) {
	return Mode{std::move(gamma), Matrix::from_rows(a), std::move(input)};
}

inline std::vector<Mode> sec6_modes() {
	std::vector<Mode> m;
	m.push_back(diag_mode({0.8850, 0.9148, 0.8530, 0.7977, 0.8764},
	                      {{-1.7919, -0.3948, 0.2564, -0.3204, -0.0156},
	                       {0.4671, 0.2490, -0.7117, -0.1370, -0.0501},
	                       {-0.7011, 0.0369, -1.8727, -0.7410, -0.0184},
	                       {-0.1982, 0.1655, 0.8427, 0.3652, -0.7693},
	                       {0.6181, 0.5135, -0.5559, 0.0658, -1.9569}},
	                      {0.6353, 0.5897, 0.2886, -0.2428, 0.6232}));
	m.push_back(diag_mode({0.7484, 0.9326, 0.6340, 0.9843, 0.5494},
	                      {{0.2630, -0.3615, 0.8626, 0.3302, 0.2694},
	                       {0.4676, -1.8345, -0.5973, -0.4837, -0.3797},
	                       {-0.8931, 0.0360, -1.7021, -0.1515, -0.8251},
	                       {-0.0750, -0.3230, 0.5239, -1.9542, -0.2013},
	                       {-0.1842, -0.0325, 0.2393, 0.3162, 0.2926}},
	                      {0.0657, -0.2985, 0.8780, 0.7519, 0.1003}));
	m.push_back(diag_mode({0.7735, 0.7015, 0.8535, 0.8621, 0.9068},
	                      {{0.3798, -0.5099, -0.4776, 1.4789, 0.8120},
	                       {-0.4506, -1.7393, 0.2600, 0.4094, 0.1505},
	                       {0.3564, 0.5781, -1.6185, 0.2230, 0.2439},
	                       {0.1150, 0.4990, -0.1876, -1.6549, -0.6292},
	                       {0.2979, 0.4720, -0.2338, -0.6050, 0.8528}},
	                      {0.2450, 0.1741, -0.5845, -0.3975, -0.0582}));
	m.push_back(diag_mode({0.8915, 0.7833, 0.9057, 0.7884, 0.9720},
	                      {{-1.7522, -0.0166, 0.3873, 0.0970, -1.1968},
	                       {-0.3338, -1.8286, 0.3803, -0.5127, 0.7253},
	                       {-0.1573, 0.4312, 0.4020, -0.5886, -0.6525},
	                       {0.0200, -0.7156, -0.6737, -1.0330, -0.5318},
	                       {-0.1808, 0.4284, 0.2678, -0.0480, -1.3318}},
	                      {-0.5390, 0.6886, -0.6105, -0.5482, -0.6586}));
	m.push_back(diag_mode({0.9357, 0.7538, 0.8944, 0.7365, 0.9144},
	                      {{-1.8018, -0.5470, -0.1406, 0.2769, -0.8000},
	                       {-0.4222, 0.2530, 0.4295, 0.5383, 0.1825},
	                       {-0.7572, -0.4001, -1.9090, 0.6196, 0.6523},
	                       {-0.7861, 0.5978, 0.2121, -1.5166, 0.2531},
	                       {0.1823, 0.5187, -0.2007, 0.3803, 0.1668}},
	                      {-0.5447, -0.1286, -0.3778, 0.8468, -0.1396}));
	m.push_back(diag_mode({0.6612, 0.9881, 0.6391, 0.5364, 0.8756},
	                      {{-1.6122, -0.4175, -0.4285, 0.5557, 0.4177},
	                       {0.1750, 0.6452, 0.2641, -0.1387, -0.4541},
	                       {0.6864, -0.1068, -1.0629, -0.1994, 0.1796},
	                       {0.4106, 0.2553, -0.7769, 0.7958, 0.5536},
	                       {0.2599, -0.1512, 0.1097, -0.3196, -1.5582}},
	                      {-0.6304, 0.8098, 0.9595, -0.1223, -0.7778}));
	return m;
}

inline std::vector<Mode> sec31_modes() {
	// external input is not part of the example; it does not enter mu
	return {diag_mode({2.1048, 0.9234}, {{1.0235, 0.2538}, {0.5014, -0.1526}}, {0.0, 0.0}),
	        diag_mode({2.1048, 0.9234}, {{-0.3253, 0.4384}, {-2.0341, -0.1526}}, {0.0, 0.0})};
}

} // namespace detail

// Phi(t) = 8000 / (0.0065 t + 6.5)^5
inline ThresholdSpec sec6_phi() {
	return ThresholdSpec::make_global(ThresholdFunction::rational(8000.0, 0.0065, 6.5, 5.0));
}

// Psi_4 is (t + 100) e^{-0.01 t - 1} / (700 Gamma(2)), Gamma(2) = 1.
inline ThresholdSpec sec6_psi() {
	return ThresholdSpec::make_per_neuron({
		ThresholdFunction::rational(27000.0, 0.007, 0.68, 6.0),
		ThresholdFunction::rational(90000.0, 0.01, 1.27, 6.0),
		ThresholdFunction::rational(80000.0, 0.012, 1.02, 6.0),
		ThresholdFunction::exp_gamma(100.0, 0.01, 1.0, 700.0),
		ThresholdFunction::rational(2100.0, 0.005, 0.5, 6.0),
	});
}

// `seed` drives the Poisson switching schedule of sec6-5neuron; sec31-2neuron
// alternates its two intervals with unit period.
inline Preset preset_paper(const std::string& name, std::uint64_t seed = 1, double horizon = 0.0) {
	Preset p;
	p.name = name;
	if (name == "sec6-5neuron") {
		if (horizon <= 0.0)
			horizon = 500.0;
		p.system.modes = detail::sec6_modes();
		p.system.activation = ActivationSpec::sigmoid(5);
		p.lambda = 1.0;
		p.system.schedule = poisson_schedule(p.lambda, horizon, p.system.modes.size(), seed);
		p.beta.assign(5, 1.0);
		p.window = 500.0;
		p.phi = sec6_phi();
		p.psi = sec6_psi();
	} else if (name == "sec31-2neuron") {
		if (horizon <= 0.0)
			horizon = 10.0;
		p.system.modes = detail::sec31_modes();
		p.system.activation = ActivationSpec::piecewise_linear({1.0017, 0.9984});
		p.lambda = 0.0;
		p.system.schedule = periodic_schedule(1.0, horizon, 2);
		p.beta.assign(2, 1.0);
		p.window = horizon;
	} else {
		throw ValidationError("unknown preset '" + name + "'", "preset");
	}
	p.system.validate();
	return p;
}

} // namespace outersync

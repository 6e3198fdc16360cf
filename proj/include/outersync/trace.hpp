#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "model.hpp"
#include "triggers.hpp"

namespace outersync {

enum class EventKind { trigger_centralized, trigger_neuron, mode_switch };

inline std::string to_string(EventKind k) {
	switch (k) {
	case EventKind::trigger_centralized: return "trigger-centralized";
	case EventKind::trigger_neuron: return "trigger-neuron";
	case EventKind::mode_switch: return "mode-switch";
	}
	return "?";
}

struct EventRecord {
	double t = 0.0;
	EventKind kind = EventKind::trigger_centralized;
	int neuron = -1;          // trigger-neuron only
	double norm_before = 0.0; // ||held difference|| before the event (rule norm)
	double norm_after = 0.0;  // ... and after it
	double rule_value = 0.0;  // integral / error value at the crossing
	double threshold = 0.0;   // margin or threshold it was compared with
	Vector u;                 // state at the event
	Vector w;

	bool is_trigger() const noexcept { return kind != EventKind::mode_switch; }
};

struct Snapshot {
	double t = 0.0;
	Vector u;
	Vector w;
	Vector w_held; // held difference in effect at t (after events at t)
};

struct SimulationTrace {
	std::size_t n = 0;
	Protocol protocol = Protocol::centralized_structure;
	NormKind norm = NormKind::L1;
	Weights xi;
	TriggerRule rule;
	BoundSet bounds;
	double horizon = 0.0;
	std::vector<Snapshot> snapshots;
	std::vector<EventRecord> events;
	std::vector<std::vector<double>> held_history; // per neuron: its sample times
	double oracle_max_deviation = 0.0;             // oracle_mode only
	std::string config_echo;                       // JSON text of the run config, if any

	std::size_t trigger_count() const {
		std::size_t c = 0;
		for (const auto& e : events)
			c += e.is_trigger() ? 1 : 0;
		return c;
	}
};

} // namespace outersync

#pragma once

#include <stdexcept>
#include <string>

namespace outersync {

// Argument outside the domain of an operation (negative rate, time past the
// horizon, ...).
struct DomainError : std::domain_error {
	using std::domain_error::domain_error;
};

// Input data failed an invariant check. `path` names the offending field when
// the data came from a config file.
struct ValidationError : std::invalid_argument {
	explicit ValidationError(const std::string& what, std::string field_path = {})
		: std::invalid_argument(field_path.empty() ? what : field_path + ": " + what)
		, path(std::move(field_path)) {}
	std::string path;
};

// A caller broke the precondition of an internal routine.
struct ContractViolation : std::logic_error {
	using std::logic_error::logic_error;
};

// Simulation aborted (non-finite state, refused rule).
struct SimulationError : std::runtime_error {
	using std::runtime_error::runtime_error;
};

} // namespace outersync

#pragma once

#include <stdexcept>
#include <string>

namespace malady {

// Error taxonomy. The CLI maps these onto exit codes:
//   invalid_parameter_error / invalid_state_error -> 2 (config error)
//   infeasibility_error                           -> 3
//   io_error                                      -> 4
//   diagnostic_error and anything else            -> 1
struct invalid_parameter_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct invalid_state_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bounds or volumes that no assignment can satisfy.
struct infeasibility_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File parse failures carry the offending path/line in the message.
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-termination guards (iteration caps) trip this; it signals an
// implementation bug, not a user error.
struct diagnostic_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace malady

#pragma once

#include <stdexcept>
#include <string>

namespace hubreg {

// Bad arguments, malformed configuration, violated preconditions.
struct invalid_input_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct empty_dataset_error : invalid_input_error {
    using invalid_input_error::invalid_input_error;
};

struct out_of_domain_error : invalid_input_error {
    using invalid_input_error::invalid_input_error;
};

// Quadrature non-convergence, singular systems, failed bracketing.
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace hubreg

#pragma once

#include <stdexcept>
#include <string>

namespace coarsen {

/// Raised when a computation produces non-finite values or hits a singular
/// matrix it cannot proceed past.
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace coarsen

#ifndef NERVEPP_ERRORS_HPP
#define NERVEPP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace nervepp {

/// Malformed or inconsistent input data (parse failures, invariant violations).
class data_error : public std::runtime_error {
public:
    explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

/// Numeric failure (optimizer divergence, undefined summary, division by zero mean).
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace nervepp

#endif // NERVEPP_ERRORS_HPP

#pragma once

#include <stdexcept>
#include <string>

namespace unshuffle {

// Vector/matrix shapes that do not agree.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// NaN or infinity in an input that must be finite.
class NumericError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// An exhaustive enumeration was refused because it would be too large.
class SizeLimitError : public std::length_error {
public:
    using std::length_error::length_error;
};

}  // namespace unshuffle

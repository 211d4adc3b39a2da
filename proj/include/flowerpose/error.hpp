#pragma once

#include <stdexcept>
#include <string>

namespace flowerpose {

// Base for every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class PlyError : public Error {
public:
    using Error::Error;
};

class DetectionError : public Error {
public:
    using Error::Error;
};

// A flower candidate that cannot be fitted (too few petal points). The
// pipeline treats this as a skip, not a failure.
class UnfittableFlower : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace flowerpose

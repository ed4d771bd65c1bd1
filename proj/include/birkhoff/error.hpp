#pragma once

#include <stdexcept>
#include <string>

namespace birkhoff {

// Error taxonomy maps onto the CLI exit-code contract:
//   invalid_input -> 1 (validation / budget failures)
//   io_error, corrupt_data -> 2 (I/O or corruption)
class invalid_input : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class corrupt_data : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace birkhoff

#pragma once

#include <stdexcept>
#include <string>

namespace flowcast {

// Error categories mirror the CLI exit codes: 1 usage, 2 config, 3 runtime,
// 4 physics-failure (an episode that ended in failed status).
enum class ErrorKind { usage = 1, config = 2, runtime = 3, physics = 4 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

inline Error usage_error(const std::string& msg) { return Error(ErrorKind::usage, msg); }
inline Error config_error(const std::string& msg) { return Error(ErrorKind::config, msg); }
inline Error runtime_error(const std::string& msg) { return Error(ErrorKind::runtime, msg); }

}  // namespace flowcast

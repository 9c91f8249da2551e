#pragma once

#include <stdexcept>
#include <string>

namespace maxperiodic {

// Exit codes used by the command line front end.
enum class ExitCode : int {
    ok = 0,
    validation = 2,
    obstruction = 3,
    quadrature = 4,
    diagnostics = 5,
};

class Error : public std::runtime_error {
public:
    Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ExitCode code() const { return code_; }

private:
    ExitCode code_;
};

struct ValidationError : Error {
    explicit ValidationError(const std::string& w) : Error(ExitCode::validation, w) {}
};

// Abel or spinor condition violated; carries the lattice distance.
struct ObstructionError : Error {
    ObstructionError(const std::string& w, double residual)
        : Error(ExitCode::obstruction, w), residual(residual) {}
    double residual;
};

struct QuadratureError : Error {
    explicit QuadratureError(const std::string& w) : Error(ExitCode::quadrature, w) {}
};

struct DiagnosticsError : Error {
    explicit DiagnosticsError(const std::string& w) : Error(ExitCode::diagnostics, w) {}
};

}  // namespace maxperiodic

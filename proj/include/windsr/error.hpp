#pragma once

#include <stdexcept>
#include <string>

namespace windsr {

// Error taxonomy shared by the C++ core, the C API (as status codes) and the
// CLI (as exit codes). Input/config problems map to exit 2, numerical
// failures to exit 3.
enum class errc {
    invalid_argument = 1,  // bad parameter value
    extent = 2,            // geobox / grid mismatch, point outside domain
    shape = 3,             // array shape mismatch
    kernel = 4,            // degradation kernel larger than field
    alignment = 5,         // temporal alignment impossible
    boundary = 6,          // window lacks context frames
    io = 7,                // file unreadable / unwritable
    data = 8,              // non-finite or inconsistent data
    schedule = 9,          // noise schedule ordering violated
    singularity = 10,      // division by vanishing signal rate
    numeric = 11,          // non-finite loss, divergence
    empty = 12,            // empty dataset / join
};

class Error : public std::runtime_error {
public:
    Error(errc code, const std::string& what) : std::runtime_error(what), code_(code) {}
    errc code() const noexcept { return code_; }

private:
    errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& what) { throw Error(code, what); }

} // namespace windsr

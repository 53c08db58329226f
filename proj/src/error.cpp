#include "fpl/error.hpp"

namespace fpl {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::argument: return "argument";
    case ErrorKind::resource: return "resource";
    case ErrorKind::not_invertible: return "not-invertible";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::accuracy: return "accuracy";
    case ErrorKind::truncation: return "truncation";
    case ErrorKind::not_found: return "not-found";
    case ErrorKind::needs_subdivision: return "needs-subdivision";
    case ErrorKind::decomposition: return "decomposition-required";
    case ErrorKind::invariant: return "invariant-violation";
    case ErrorKind::io: return "io";
    }
    return "unknown";
}

void throw_argument(const std::string& what) { throw Error(ErrorKind::argument, what); }

void throw_resource(const std::string& what) { throw Error(ErrorKind::resource, what); }

}  // namespace fpl

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sdioph {

enum class errc {
    invalid_place,
    dimension,
    domain,
    parse,
    degenerate_pair,
    empty_window,
    arity,
    not_a_lattice,
    hypothesis_failure,
    search_too_large,
    precision_exhausted,
    radius,
    empty_ball,
    fit,
    validation,
    usage,
};

constexpr std::string_view errc_name(errc c) {
    switch (c) {
        case errc::invalid_place: return "invalid-place";
        case errc::dimension: return "dimension";
        case errc::domain: return "domain";
        case errc::parse: return "parse";
        case errc::degenerate_pair: return "degenerate-pair";
        case errc::empty_window: return "empty-window";
        case errc::arity: return "arity";
        case errc::not_a_lattice: return "not-a-lattice";
        case errc::hypothesis_failure: return "hypothesis-failure";
        case errc::search_too_large: return "search-too-large";
        case errc::precision_exhausted: return "precision-exhausted";
        case errc::radius: return "radius";
        case errc::empty_ball: return "empty-ball";
        case errc::fit: return "fit";
        case errc::validation: return "validation";
        case errc::usage: return "usage";
    }
    return "unknown";
}

/// Every failure raised by the library carries one of the codes above.
class error : public std::runtime_error {
public:
    error(errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    errc code() const noexcept { return code_; }

private:
    errc code_;
};

}  // namespace sdioph

#pragma once
// Domain extraction: hostname minus one leading "www." for http(s) URLs,
// the whole URL for other schemes, "invalid:" when nothing parses.

#include <cctype>
#include <string>
#include <string_view>

namespace rebrowse {

inline constexpr std::string_view kInvalidDomain = "invalid:";

namespace detail {

inline bool is_scheme_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.';
}

inline std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

}  // namespace detail

// Deterministic and total. Non-http(s) schemes (chrome://newtab, about:blank,
// file:// ...) pass through whole so they stay distinguishable downstream.
inline std::string extract_domain(std::string_view url) {
    if (url.empty()) return std::string(kInvalidDomain);

    // scheme = ALPHA *(ALPHA / DIGIT / "+" / "-" / ".") ":"
    size_t colon = url.find(':');
    if (colon == 0 || colon == std::string_view::npos)
        return std::string(kInvalidDomain);
    if (!std::isalpha(static_cast<unsigned char>(url[0])))
        return std::string(kInvalidDomain);
    for (size_t i = 1; i < colon; ++i)
        if (!detail::is_scheme_char(url[i])) return std::string(kInvalidDomain);

    std::string scheme = detail::ascii_lower(url.substr(0, colon));
    if (scheme != "http" && scheme != "https") return std::string(url);

    std::string_view rest = url.substr(colon + 1);
    if (rest.substr(0, 2) != "//") return std::string(kInvalidDomain);
    rest.remove_prefix(2);

    // authority = [userinfo "@"] host [":" port], ends at /, ? or #
    size_t end = rest.find_first_of("/?#");
    std::string_view authority = rest.substr(0, end);
    size_t at = authority.rfind('@');
    if (at != std::string_view::npos) authority.remove_prefix(at + 1);

    std::string_view host = authority;
    if (!host.empty() && host.front() == '[') {
        size_t close = host.find(']');
        if (close == std::string_view::npos) return std::string(kInvalidDomain);
        host = host.substr(0, close + 1);
    } else {
        size_t port = host.find(':');
        if (port != std::string_view::npos) host = host.substr(0, port);
    }
    if (host.empty()) return std::string(kInvalidDomain);

    std::string lowered = detail::ascii_lower(host);
    if (lowered.size() >= 4 && lowered.compare(0, 4, "www.") == 0)
        lowered.erase(0, 4);
    if (lowered.empty()) return std::string(kInvalidDomain);
    return lowered;
}

}  // namespace rebrowse

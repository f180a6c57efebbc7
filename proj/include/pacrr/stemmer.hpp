#pragma once

#include <string>
#include <string_view>

namespace pacrr {

/// Porter (1980) suffix-stripping stemmer.
///
/// Input outside [a-z]+ is returned unchanged, as are words of one or two
/// letters (the same short-word rule as Porter's reference C release).
std::string porter_stem(std::string_view term);

}  // namespace pacrr

#pragma once

#include <string>
#include <string_view>

namespace matchpyramid {

/// Porter (1980) suffix stripper, original rule set.
///
/// Input is expected lower-case ASCII. Words of length <= 2 are returned
/// unchanged, as in the reference C implementation.
std::string porter_stem(std::string_view word);

}  // namespace matchpyramid

#ifndef STPOISSON_VERSION_HPP
#define STPOISSON_VERSION_HPP

namespace stpoisson {

inline constexpr const char* kVersion = "0.1.0";

}

#endif

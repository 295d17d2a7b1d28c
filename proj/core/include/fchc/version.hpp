#ifndef FCHC_VERSION_HPP
#define FCHC_VERSION_HPP

namespace fchc {

inline constexpr const char* kVersion = "0.1.0";

}

#endif

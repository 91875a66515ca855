#ifndef SVYCAT_VERSION_HPP
#define SVYCAT_VERSION_HPP

#define SVYCAT_VERSION_MAJOR 0
#define SVYCAT_VERSION_MINOR 1
#define SVYCAT_VERSION_PATCH 0

namespace svycat {

inline constexpr const char* version_string() { return "0.1.0"; }

}  // namespace svycat

#endif

#ifndef WELFARE_VERSION_HPP
#define WELFARE_VERSION_HPP

namespace welfare {

inline constexpr const char* tool_name = "welfare";
inline constexpr const char* tool_version = "0.1.0";
inline constexpr int report_schema_version = 1;

} // namespace welfare

#endif

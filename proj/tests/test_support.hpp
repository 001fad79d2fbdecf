#ifndef COIL_TESTS_TEST_SUPPORT_HPP
#define COIL_TESTS_TEST_SUPPORT_HPP

#include <fstream>
#include <sstream>
#include <string>

#include "coil/dsl_text.hpp"

namespace coil::testing {

inline std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

// One of the definitions under tests/defs.
inline dsl::CoroutineDef test_def(const std::string& name)
{
    return dsl::parse_builder_text(read_file(std::string(COIL_TEST_DEFS_DIR) + "/" + name + ".coil"));
}

} // namespace coil::testing

#endif // COIL_TESTS_TEST_SUPPORT_HPP

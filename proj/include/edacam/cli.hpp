#pragma once

namespace edacam {

int cli_main(int argc, char** argv);

}  // namespace edacam

#include "edacam/cli_impl.hpp"

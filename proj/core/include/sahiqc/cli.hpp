#pragma once

namespace sahiqc::cli {
int run(int argc, char** argv);
}

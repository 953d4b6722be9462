#include <cstdlib>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"

int main(int argc, char** argv) {
    // Logs go to stderr so stdout carries results only.
    spdlog::set_default_logger(spdlog::stderr_color_mt("krbary"));
    const char* level = std::getenv("KRBARY_LOG");
    spdlog::set_level(spdlog::level::from_str(level ? level : "error"));
    std::vector<std::string> args(argv + 1, argv + argc);
    return cli::run(args);
}

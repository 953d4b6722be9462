#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace cli {

using Json = nlohmann::ordered_json;

std::string sha256Hex(const std::string& bytes);
std::string sha256File(const std::filesystem::path& path);

// Collects what a run read, wrote and printed. Every command writes one.
class RunRecord {
public:
    RunRecord(std::string command, std::vector<std::string> argv, std::filesystem::path outdir);

    const std::string& command() const { return command_; }
    const std::filesystem::path& outdir() const { return outdir_; }

    // Relative paths land under the output directory.
    std::filesystem::path output(const std::string& path) const;

    void input(const std::filesystem::path& path);
    void wrote(const std::filesystem::path& path);
    void set(const std::string& key, Json value) { params_[key] = std::move(value); }
    void diagnostic(const std::string& key, Json value) { diag_[key] = std::move(value); }
    void seed(std::uint64_t s) { seed_ = s; }

    // Text printed to stdout at the end of the run.
    std::ostringstream out;

    Json manifest() const;

private:
    std::string command_;
    std::vector<std::string> argv_;
    std::filesystem::path outdir_;
    Json params_ = Json::object(), diag_ = Json::object();
    std::vector<std::pair<std::string, std::string>> inputs_, outputs_;
    std::optional<std::uint64_t> seed_;
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace cli

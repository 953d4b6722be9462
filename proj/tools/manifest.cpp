#include "manifest.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>

#include "krbary/io.hpp"

namespace cli {

std::string sha256Hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
    std::string hex;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", md[i]);
        hex += buf;
    }
    return hex;
}

std::string sha256File(const std::filesystem::path& path) { return sha256Hex(krbary::io::readFile(path)); }

RunRecord::RunRecord(std::string command, std::vector<std::string> argv, std::filesystem::path outdir)
    : command_(std::move(command)), argv_(std::move(argv)), outdir_(std::move(outdir)) {}

std::filesystem::path RunRecord::output(const std::string& path) const {
    std::filesystem::path p(path);
    return p.is_absolute() ? p : outdir_ / p;
}

void RunRecord::input(const std::filesystem::path& path) { inputs_.emplace_back(path.string(), sha256File(path)); }

void RunRecord::wrote(const std::filesystem::path& path) {
    auto it = std::find_if(outputs_.begin(), outputs_.end(), [&](const auto& o) { return o.first == path.string(); });
    if (it != outputs_.end()) outputs_.erase(it);
    outputs_.emplace_back(path.string(), sha256File(path));
}

Json RunRecord::manifest() const {
    Json j;
    j["command"] = command_;
    j["argv"] = argv_;
    j["cwd"] = std::filesystem::current_path().string();
    j["outdir"] = outdir_.string();
    j["parameters"] = params_;
    j["seed"] = seed_ ? Json(*seed_) : Json(nullptr);
    Json in = Json::array(), outs = Json::array();
    for (const auto& [p, h] : inputs_) in.push_back({{"path", p}, {"sha256", h}});
    for (const auto& [p, h] : outputs_) outs.push_back({{"path", p}, {"sha256", h}});
    j["inputs"] = in;
    j["outputs"] = outs;
    j["stdout_sha256"] = sha256Hex(out.str());
    j["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    j["diagnostics"] = diag_;
    return j;
}

}  // namespace cli

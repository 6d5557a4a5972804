#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "irrig/neural/mlp.hpp"

namespace irrig::neural {

inline constexpr const char* kCheckpointMagic = "irrig-checkpoint v1";

/// Named real arrays written as text with full round-trip precision.
class Checkpoint {
public:
    void put(const std::string& name, const Mat& value);
    const Mat& get(const std::string& name) const;
    bool contains(const std::string& name) const { return arrays_.count(name) != 0; }
    const std::map<std::string, Mat>& arrays() const { return arrays_; }

    void put_mlp(const std::string& prefix, const Mlp& net);
    Mlp get_mlp(const std::string& prefix) const;

    void save(const std::filesystem::path& path) const;
    static Checkpoint load(const std::filesystem::path& path);

private:
    std::map<std::string, Mat> arrays_;
};

}  // namespace irrig::neural

#pragma once

#include <fstream>
#include <json.hpp>
#include <string>

#include "irrig/soilsim/hydraulics.hpp"

namespace irrig::testing {

inline soilsim::HydraulicParams hydraulic_fixture(const std::string& name) {
    std::ifstream in(std::string(IRRIG_FIXTURE_DIR) + "/hydraulics.json");
    const auto j = nlohmann::json::parse(in).at(name);
    return {j.at("Ks").get<double>(), j.at("theta_s").get<double>(), j.at("theta_r").get<double>(),
            j.at("alpha").get<double>(), j.at("n").get<double>()};
}

}  // namespace irrig::testing

#pragma once

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace msfbm {

struct CovCurve {
    std::vector<double> lags;
    std::vector<double> values;
    std::string meta;
    bool absolute_time = false;  // lags in units of Delta when false

    void check() const;
    std::string to_csv() const;
    nlohmann::json to_json() const;
    static CovCurve from_json(const nlohmann::json& j);
};

// a - b on identical lag grids
CovCurve operator-(const CovCurve& a, const CovCurve& b);

}  // namespace msfbm

#include "msfbm/curve.hpp"

#include "msfbm/model.hpp"

#include <cmath>
#include <cstdio>

namespace msfbm {

void CovCurve::check() const {
    if (lags.empty()) throw StructuralError("curve is empty");
    if (lags.size() != values.size()) throw StructuralError("curve lags and values differ in length");
    for (size_t k = 0; k < lags.size(); ++k) {
        if (!std::isfinite(values[k])) throw StructuralError("non-finite curve value");
        if (k > 0 && !(lags[k] > lags[k - 1])) throw StructuralError("curve lags not strictly increasing");
    }
}

std::string CovCurve::to_csv() const {
    std::string s = "lag,value\n";
    char buf[96];
    for (size_t k = 0; k < lags.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", lags[k], values[k]);
        s += buf;
    }
    return s;
}

nlohmann::json CovCurve::to_json() const {
    return {{"meta", meta}, {"lag_unit", absolute_time ? "time" : "delta"}, {"lags", lags}, {"values", values}};
}

CovCurve CovCurve::from_json(const nlohmann::json& j) {
    CovCurve c;
    c.meta = j.value("meta", "");
    c.absolute_time = j.value("lag_unit", "delta") == "time";
    c.lags = j.at("lags").get<std::vector<double>>();
    c.values = j.at("values").get<std::vector<double>>();
    c.check();
    return c;
}

CovCurve operator-(const CovCurve& a, const CovCurve& b) {
    if (a.lags != b.lags) throw StructuralError("curves on different lag grids");
    CovCurve r = a;
    for (size_t k = 0; k < r.values.size(); ++k) r.values[k] -= b.values[k];
    r.meta = "residual";
    return r;
}

}  // namespace msfbm

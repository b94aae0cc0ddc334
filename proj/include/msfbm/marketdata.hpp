#pragma once

#include "msfbm/simulate.hpp"

#include <chrono>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace msfbm {

using Date = std::chrono::sys_days;

Date parse_date(const std::string& s);
std::string format_date(Date d);

struct OhlcBar {
    Date date;
    double open = 0, high = 0, low = 0, close = 0;

    bool valid() const;
};

struct ParseReport {
    std::string source;
    int rows = 0;
    int kept = 0;
    int dropped = 0;
    std::vector<std::string> messages;
};

std::vector<OhlcBar> parse_ohlc_csv(std::istream& in, ParseReport* report = nullptr);
std::vector<OhlcBar> parse_ohlc_csv(const std::string& path, ParseReport* report = nullptr);
// one CSV per asset, asset id = file stem
std::map<std::string, std::vector<OhlcBar>> load_ohlc_dir(const std::string& dir, std::vector<ParseReport>* reports = nullptr);

double garman_klass(const OhlcBar& bar);

struct VolPanel {
    std::vector<std::string> assets;
    std::vector<Date> dates;
    Eigen::MatrixXd logvar;                          // assets x dates, ln(sigma_GK^2)
    std::vector<std::vector<unsigned char>> mask;   // 1 = imputed from the floor

    void write_csv(std::ostream& out) const;
    static VolPanel read_csv(std::istream& in, double floor = 1e-12);
    FieldPanel to_field_panel() const;
};

VolPanel build_panel(const std::map<std::string, std::vector<OhlcBar>>& assets, int min_overlap,
                     double floor = 1e-12);

}  // namespace msfbm

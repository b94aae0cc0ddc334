#include "msfbm/marketdata.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace msfbm {

namespace {

std::string trim(std::string s) {
    auto issp = [](unsigned char c) { return std::isspace(c) || c == '"'; };
    while (!s.empty() && issp(s.back())) s.pop_back();
    size_t i = 0;
    while (i < s.size() && issp(s[i])) ++i;
    return s.substr(i);
}

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

Date parse_date(const std::string& s) {
    int y, m, d;
    char c1, c2;
    std::istringstream is(s.substr(0, 10));
    if (!(is >> y >> c1 >> m >> c2 >> d) || c1 != '-' || c2 != '-') throw StructuralError("bad ISO-8601 date '" + s + "'");
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                    std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) throw StructuralError("invalid calendar date '" + s + "'");
    return Date{ymd};
}

std::string format_date(Date d) {
    std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", int(ymd.year()), unsigned(ymd.month()), unsigned(ymd.day()));
    return buf;
}

bool OhlcBar::valid() const {
    return open > 0 && high > 0 && low > 0 && close > 0 && low <= std::min(open, close) &&
           high >= std::max(open, close) && std::isfinite(open + high + low + close);
}

std::vector<OhlcBar> parse_ohlc_csv(std::istream& in, ParseReport* report) {
    ParseReport local;
    ParseReport& rep = report ? *report : local;
    std::string line;
    while (std::getline(in, line) && trim(line).empty()) {
    }
    if (trim(line).empty()) throw StructuralError("empty OHLC file");
    auto head = split(line);
    int col[5] = {-1, -1, -1, -1, -1};
    const char* names[5] = {"date", "open", "high", "low", "close"};
    for (size_t c = 0; c < head.size(); ++c)
        for (int k = 0; k < 5; ++k)
            if (lower(head[c]) == names[k] && col[k] < 0) col[k] = static_cast<int>(c);
    for (int k = 0; k < 5; ++k)
        if (col[k] < 0) throw StructuralError(std::string("OHLC header lacks column ") + names[k]);
    std::vector<OhlcBar> bars;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        ++rep.rows;
        auto cells = split(line);
        OhlcBar b;
        try {
            int need = *std::max_element(col, col + 5);
            if (static_cast<int>(cells.size()) <= need) throw StructuralError("short row");
            b.date = parse_date(cells[col[0]]);
            b.open = std::stod(cells[col[1]]);
            b.high = std::stod(cells[col[2]]);
            b.low = std::stod(cells[col[3]]);
            b.close = std::stod(cells[col[4]]);
        } catch (const std::exception& e) {
            ++rep.dropped;
            rep.messages.push_back("line " + std::to_string(lineno) + ": unparseable (" + e.what() + ")");
            continue;
        }
        if (!b.valid()) {
            ++rep.dropped;
            rep.messages.push_back("line " + std::to_string(lineno) + ": bar violates low <= open,close <= high");
            continue;
        }
        bars.push_back(b);
    }
    std::sort(bars.begin(), bars.end(), [](const OhlcBar& a, const OhlcBar& b) { return a.date < b.date; });
    for (size_t k = 1; k < bars.size(); ++k)
        if (bars[k].date == bars[k - 1].date) throw StructuralError("duplicate date " + format_date(bars[k].date));
    rep.kept = static_cast<int>(bars.size());
    return bars;
}

std::vector<OhlcBar> parse_ohlc_csv(const std::string& path, ParseReport* report) {
    std::ifstream in(path);
    if (!in) throw StructuralError("cannot open " + path);
    if (report) report->source = path;
    return parse_ohlc_csv(in, report);
}

std::map<std::string, std::vector<OhlcBar>> load_ohlc_dir(const std::string& dir, std::vector<ParseReport>* reports) {
    namespace fs = std::filesystem;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && lower(e.path().extension().string()) == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::map<std::string, std::vector<OhlcBar>> out;
    for (const auto& f : files) {
        ParseReport r;
        out[f.stem().string()] = parse_ohlc_csv(f.string(), &r);
        if (reports) reports->push_back(r);
    }
    return out;
}

double garman_klass(const OhlcBar& b) {
    if (!(b.open > 0 && b.high > 0 && b.low > 0 && b.close > 0)) throw std::domain_error("prices must be positive");
    double hl = std::log(b.high / b.low), co = std::log(b.close / b.open);
    return 0.5 * hl * hl - (2 * std::log(2.0) - 1) * co * co;
}

VolPanel build_panel(const std::map<std::string, std::vector<OhlcBar>>& assets, int min_overlap, double floor) {
    if (assets.empty()) throw StructuralError("no assets");
    if (!(floor > 0)) throw std::domain_error("floor must be positive");
    std::set<Date> common;
    bool first = true;
    for (const auto& [id, bars] : assets) {
        std::set<Date> s;
        for (const auto& b : bars) s.insert(b.date);
        if (first) {
            common = std::move(s);
            first = false;
        } else {
            std::set<Date> keep;
            std::set_intersection(common.begin(), common.end(), s.begin(), s.end(), std::inserter(keep, keep.end()));
            common = std::move(keep);
        }
    }
    if (static_cast<int>(common.size()) < min_overlap)
        throw std::domain_error("date overlap " + std::to_string(common.size()) + " below minimum " +
                                std::to_string(min_overlap));
    VolPanel p;
    p.dates.assign(common.begin(), common.end());
    const int n = static_cast<int>(p.dates.size());
    p.logvar.resize(assets.size(), n);
    int i = 0;
    for (const auto& [id, bars] : assets) {
        p.assets.push_back(id);
        std::vector<unsigned char> m(n, 0);
        size_t k = 0;
        for (const auto& b : bars) {
            if (k < p.dates.size() && b.date == p.dates[k]) {
                double v = garman_klass(b);
                if (v <= 0) {
                    v = floor;
                    m[k] = 1;
                }
                p.logvar(i, k) = std::log(v);
                ++k;
            }
        }
        p.mask.push_back(std::move(m));
        ++i;
    }
    return p;
}

void VolPanel::write_csv(std::ostream& out) const {
    out << "date";
    for (const auto& a : assets) out << "," << a;
    out << "\n";
    char buf[40];
    for (size_t k = 0; k < dates.size(); ++k) {
        out << format_date(dates[k]);
        for (size_t i = 0; i < assets.size(); ++i) {
            out << ",";
            if (mask[i][k]) continue;
            std::snprintf(buf, sizeof buf, "%.17g", logvar(i, k));
            out << buf;
        }
        out << "\n";
    }
}

VolPanel VolPanel::read_csv(std::istream& in, double floor) {
    VolPanel p;
    std::string line;
    if (!std::getline(in, line)) throw StructuralError("empty panel file");
    auto head = split(line);
    if (head.size() < 2 || lower(head[0]) != "date") throw StructuralError("panel header must start with date");
    p.assets.assign(head.begin() + 1, head.end());
    const size_t d = p.assets.size();
    std::vector<std::vector<double>> vals(d);
    p.mask.assign(d, {});
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto cells = split(line);
        cells.resize(d + 1);
        p.dates.push_back(parse_date(cells[0]));
        for (size_t i = 0; i < d; ++i) {
            bool imputed = cells[i + 1].empty();
            double v = imputed ? std::log(floor) : std::stod(cells[i + 1]);
            if (!imputed && !std::isfinite(v)) throw StructuralError("non-finite panel value");
            vals[i].push_back(v);
            p.mask[i].push_back(imputed ? 1 : 0);
        }
    }
    for (size_t k = 1; k < p.dates.size(); ++k)
        if (!(p.dates[k] > p.dates[k - 1])) throw StructuralError("panel dates not strictly increasing");
    p.logvar.resize(d, p.dates.size());
    for (size_t i = 0; i < d; ++i)
        for (size_t k = 0; k < p.dates.size(); ++k) p.logvar(i, k) = vals[i][k];
    return p;
}

FieldPanel VolPanel::to_field_panel() const {
    FieldPanel f;
    f.d = static_cast<int>(assets.size());
    f.N = static_cast<int>(dates.size());
    f.Delta = 1.0;
    f.data = logvar;
    f.provenance = Provenance::Market;
    return f;
}

}  // namespace msfbm

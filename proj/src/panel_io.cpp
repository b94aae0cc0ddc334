#include "msfbm/panel_io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace msfbm {

static_assert(std::endian::native == std::endian::little, "binary panels assume a little-endian host");

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::ifstream open_in(const std::string& path, bool binary = false) {
    std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
    if (!in) throw StructuralError("cannot open " + path);
    return in;
}

std::ofstream open_out(const std::string& path, bool binary = false) {
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) throw std::runtime_error("cannot write " + path);
    return out;
}

}  // namespace

void write_panel_csv(const FieldPanel& p, std::ostream& out) {
    p.check();
    out << "# Delta=" << fmt(p.Delta) << ",provenance=" << provenance_name(p.provenance) << ",seed=" << p.seed
        << "\n";
    out << "t";
    for (int i = 0; i < p.d; ++i) out << ",x" << i;
    out << "\n";
    for (int k = 0; k < p.N; ++k) {
        out << k;
        for (int i = 0; i < p.d; ++i) out << "," << fmt(p.data(i, k));
        out << "\n";
    }
}

void write_panel_csv(const FieldPanel& p, const std::string& path) {
    auto out = open_out(path);
    write_panel_csv(p, out);
}

FieldPanel read_panel_csv(std::istream& in) {
    FieldPanel p;
    std::string line;
    if (!std::getline(in, line) || line.rfind("# ", 0) != 0) throw StructuralError("panel CSV lacks its # header");
    std::stringstream hs(line.substr(2));
    std::string kv;
    while (std::getline(hs, kv, ',')) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
        if (k == "Delta") p.Delta = std::stod(v);
        else if (k == "provenance") p.provenance = provenance_from_name(v);
        else if (k == "seed") p.seed = std::stoull(v);
    }
    if (!std::getline(in, line)) throw StructuralError("panel CSV lacks a column header");
    int d = 0;
    for (char c : line) d += c == ',';
    if (d < 1) throw StructuralError("panel CSV has no marginal columns");
    std::vector<std::vector<double>> cols(d);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ls(line);
        std::string cell;
        std::getline(ls, cell, ',');
        for (int i = 0; i < d; ++i) {
            if (!std::getline(ls, cell, ',')) throw StructuralError("short row in panel CSV");
            cols[i].push_back(std::stod(cell));
        }
    }
    p.d = d;
    p.N = static_cast<int>(cols[0].size());
    p.data.resize(d, p.N);
    for (int i = 0; i < d; ++i)
        for (int k = 0; k < p.N; ++k) p.data(i, k) = cols[i][k];
    p.check();
    return p;
}

FieldPanel read_panel_csv(const std::string& path) {
    auto in = open_in(path);
    return read_panel_csv(in);
}

void write_panel_binary(const FieldPanel& p, const std::string& path) {
    p.check();
    auto out = open_out(path, true);
    out.write("MSFB1", 5);
    std::uint8_t prov = static_cast<std::uint8_t>(p.provenance);
    std::uint32_t d = p.d;
    std::uint64_t N = p.N, seed = p.seed;
    out.write(reinterpret_cast<const char*>(&prov), 1);
    out.write(reinterpret_cast<const char*>(&d), 4);
    out.write(reinterpret_cast<const char*>(&N), 8);
    out.write(reinterpret_cast<const char*>(&p.Delta), 8);
    out.write(reinterpret_cast<const char*>(&seed), 8);
    for (int i = 0; i < p.d; ++i)
        for (int k = 0; k < p.N; ++k) {
            double v = p.data(i, k);
            out.write(reinterpret_cast<const char*>(&v), 8);
        }
}

FieldPanel read_panel_binary(const std::string& path) {
    auto in = open_in(path, true);
    char magic[5];
    in.read(magic, 5);
    if (!in || std::memcmp(magic, "MSFB1", 5) != 0) throw StructuralError(path + " is not an MSFB1 panel");
    std::uint8_t prov = 0;
    std::uint32_t d = 0;
    std::uint64_t N = 0, seed = 0;
    FieldPanel p;
    in.read(reinterpret_cast<char*>(&prov), 1);
    in.read(reinterpret_cast<char*>(&d), 4);
    in.read(reinterpret_cast<char*>(&N), 8);
    in.read(reinterpret_cast<char*>(&p.Delta), 8);
    in.read(reinterpret_cast<char*>(&seed), 8);
    if (!in || prov > 3) throw StructuralError("truncated MSFB1 header");
    p.d = static_cast<int>(d);
    p.N = static_cast<int>(N);
    p.seed = seed;
    p.provenance = static_cast<Provenance>(prov);
    p.data.resize(p.d, p.N);
    for (int i = 0; i < p.d; ++i)
        for (int k = 0; k < p.N; ++k) in.read(reinterpret_cast<char*>(&p.data(i, k)), 8);
    if (!in) throw StructuralError("truncated MSFB1 payload");
    p.check();
    return p;
}

void write_prices_csv(const PricePanel& p, double Delta, std::ostream& out) {
    out << "# Delta=" << fmt(Delta) << ",seed=" << p.seed << "\n";
    out << "t";
    for (long i = 0; i < p.X.rows(); ++i) out << ",X" << i;
    out << "\n";
    for (long k = 0; k < p.X.cols(); ++k) {
        out << fmt(k * Delta);
        for (long i = 0; i < p.X.rows(); ++i) out << "," << fmt(p.X(i, k));
        out << "\n";
    }
}

}  // namespace msfbm

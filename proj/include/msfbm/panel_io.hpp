#pragma once

#include "msfbm/simulate.hpp"

#include <iosfwd>
#include <string>

namespace msfbm {

void write_panel_csv(const FieldPanel& p, std::ostream& out);
void write_panel_csv(const FieldPanel& p, const std::string& path);
FieldPanel read_panel_csv(std::istream& in);
FieldPanel read_panel_csv(const std::string& path);

// "MSFB1" magic, provenance code (u8), d (u32), N (u64), Delta (f64), seed (u64),
// then d x N little-endian f64 values, row-major
void write_panel_binary(const FieldPanel& p, const std::string& path);
FieldPanel read_panel_binary(const std::string& path);

void write_prices_csv(const PricePanel& p, double Delta, std::ostream& out);

}  // namespace msfbm

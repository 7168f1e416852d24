#pragma once

#include <iosfwd>
#include <string>

#include "mkv/simulate.hpp"

namespace mkv {

// CSV panel layout: header "time,x1,...,xN", one row per grid time. Values are
// printed with shortest round-trip formatting, so parse + re-serialize is
// byte-identical.
void write_panel_csv(const TrajectoryPanel& panel, std::ostream& os);
TrajectoryPanel read_panel_csv(std::istream& is);

// Compact binary layout: magic "MKVP", version byte, little-endian u64 N,
// u64 n, f64 T, then the N x (n+1) payload row-major as f64.
void write_panel_mkvp(const TrajectoryPanel& panel, std::ostream& os);
TrajectoryPanel read_panel_mkvp(std::istream& is);

// Path helpers; format chosen by extension on write (".mkvp" binary,
// anything else CSV) and by sniffing the magic on read.
void save_panel(const TrajectoryPanel& panel, const std::string& path);
TrajectoryPanel load_panel(const std::string& path);

} // namespace mkv

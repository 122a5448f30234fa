#pragma once

#include <filesystem>

#include "dataneeds/rfsignal.hpp"

namespace dataneeds::io {

// Binary container: concatenated records, little-endian. Per observation:
//   label  u16
//   length u32
//   params 9 x f64 (snr_db, freq_offset, srm, g_tx, g_rx, phi_tx, phi_rx,
//                   gain, phase)
//   samples length x (f32 I, f32 Q)
void write_dataset(const std::filesystem::path& file, const rfsignal::Dataset& ds);
rfsignal::Dataset read_dataset(const std::filesystem::path& file, int n_classes = 0);

}  // namespace dataneeds::io

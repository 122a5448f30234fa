#include "dataneeds/dataset_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "dataneeds/errors.hpp"

namespace dataneeds::io {

namespace {

void put_bytes(std::string& buf, std::uint64_t v, int n_bytes) {
  for (int i = 0; i < n_bytes; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& buf, double v) {
  put_bytes(buf, std::bit_cast<std::uint64_t>(v), 8);
}

void put_f32(std::string& buf, float v) {
  put_bytes(buf, std::bit_cast<std::uint32_t>(v), 4);
}

std::uint64_t get_bytes(const char* p, int n_bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < n_bytes; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
  return v;
}

}  // namespace

void write_dataset(const std::filesystem::path& file, const rfsignal::Dataset& ds) {
  std::string buf;
  for (const auto& obs : ds.observations) {
    const auto& m = obs.meta;
    put_bytes(buf, static_cast<std::uint16_t>(obs.label), 2);
    put_bytes(buf, static_cast<std::uint32_t>(obs.samples.size()), 4);
    for (double p : {m.snr_db, m.freq_offset, m.srm, m.g_tx, m.g_rx, m.phi_tx,
                     m.phi_rx, m.gain, m.phase})
      put_f64(buf, p);
    for (const auto& s : obs.samples) {
      put_f32(buf, static_cast<float>(s.real()));
      put_f32(buf, static_cast<float>(s.imag()));
    }
  }
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + file.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("write failed: " + file.string());
}

rfsignal::Dataset read_dataset(const std::filesystem::path& file, int n_classes) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ValidationError("cannot open dataset: " + file.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  constexpr std::size_t kHeader = 2 + 4 + 9 * 8;
  rfsignal::Dataset ds;
  std::size_t pos = 0;
  int max_label = -1;
  while (pos < buf.size()) {
    if (pos + kHeader > buf.size())
      throw ValidationError(file.string() + ": truncated record header");
    rfsignal::Observation obs;
    obs.label = static_cast<int>(get_bytes(&buf[pos], 2));
    const auto len = static_cast<std::uint32_t>(get_bytes(&buf[pos + 2], 4));
    double* params[9] = {&obs.meta.snr_db, &obs.meta.freq_offset, &obs.meta.srm,
                         &obs.meta.g_tx,   &obs.meta.g_rx,        &obs.meta.phi_tx,
                         &obs.meta.phi_rx, &obs.meta.gain,        &obs.meta.phase};
    for (int i = 0; i < 9; ++i)
      *params[i] = std::bit_cast<double>(get_bytes(&buf[pos + 6 + 8 * i], 8));
    pos += kHeader;
    if (pos + static_cast<std::size_t>(len) * 8 > buf.size())
      throw ValidationError(file.string() + ": truncated sample data");
    obs.samples.resize(len);
    for (std::uint32_t i = 0; i < len; ++i) {
      const auto re = std::bit_cast<float>(
          static_cast<std::uint32_t>(get_bytes(&buf[pos + 8 * i], 4)));
      const auto im = std::bit_cast<float>(
          static_cast<std::uint32_t>(get_bytes(&buf[pos + 8 * i + 4], 4)));
      obs.samples[i] = {static_cast<double>(re), static_cast<double>(im)};
    }
    pos += static_cast<std::size_t>(len) * 8;
    max_label = std::max(max_label, obs.label);
    ds.observations.push_back(std::move(obs));
  }
  ds.n_classes = n_classes > 0 ? n_classes : max_label + 1;
  return ds;
}

}  // namespace dataneeds::io

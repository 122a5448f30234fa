#pragma once

#include <filesystem>

#include "dataneeds/metrics.hpp"

namespace dataneeds::io {

// Logits CSV: one `# kind=<probs|logits> classes=<C>` header line, then
// `id,label,v0,...,v{C-1}` rows. Values are written with 17 significant
// digits so files reparse to the same doubles.
void write_logits_csv(const std::filesystem::path& file,
                      const metrics::PredictionSet& pred);

// kind=logits rows are softmaxed; kind=probs rows must sum to 1 within 1e-6
// and are renormalized to machine precision.
metrics::PredictionSet read_logits_csv(const std::filesystem::path& file);

}  // namespace dataneeds::io

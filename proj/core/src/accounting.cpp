// Copyright 2026 The cloformer-cpp Authors
// SPDX-License-Identifier: Apache-2.0

#include "cloformer/accounting.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include "cloformer/error.hpp"

namespace clo {

void CostReport::add(std::string name, std::uint64_t params, std::uint64_t flops) {
  total_params += params;
  total_flops += flops;
  breakdown.push_back({std::move(name), params, flops});
}

std::string CostReport::to_text() const {
  std::size_t width = 5;
  for (const auto& e : breakdown) width = std::max(width, e.name.size());
  std::ostringstream out;
  char line[64];
  auto row = [&](const std::string& name, std::uint64_t params, std::uint64_t flops) {
    out << name << std::string(width - name.size() + 2, ' ');
    std::snprintf(line, sizeof line, "%12llu %15llu\n", static_cast<unsigned long long>(params),
                  static_cast<unsigned long long>(flops));
    out << line;
  };
  out << "module" << std::string(width - 4, ' ');
  std::snprintf(line, sizeof line, "%12s %15s\n", "params", "flops");
  out << line;
  for (const auto& e : breakdown) row(e.name, e.params, e.flops);
  row("total", total_params, total_flops);
  std::snprintf(line, sizeof line, "%.3fM params, %.3fG flops @ %zux%zu\n", total_params / 1e6,
                total_flops / 1e9, input_h, input_w);
  out << line;
  return out.str();
}

std::string CostReport::to_csv() const {
  std::ostringstream out;
  out << "name,params,flops\n";
  for (const auto& e : breakdown) out << e.name << ',' << e.params << ',' << e.flops << '\n';
  return out.str();
}

template <typename T>
CostReport count_params(const BasicModel<T>& m) {
  CostReport report;
  std::vector<std::string> order;
  std::map<std::string, std::uint64_t> sizes;
  for (const auto& p : m.named_parameters()) {
    const std::string module = p.name.substr(0, p.name.rfind('.'));
    if (!sizes.count(module)) order.push_back(module);
    sizes[module] += p.tensor.numel();
  }
  for (const auto& name : order) report.add(name, sizes[name], 0);
  return report;
}

namespace {

template <typename T>
std::uint64_t numel_of(const BasicTensor<T>& t) {
  return t.defined() ? t.numel() : 0;
}

template <typename T>
struct Walker {
  CostReport& report;
  std::size_t h = 0;
  std::size_t w = 0;

  std::uint64_t positions() const { return std::uint64_t(h) * w; }

  void norm(const std::string& name, const BasicTensor<T>& gain, const BasicTensor<T>& offset) {
    report.add(name, numel_of(gain) + numel_of(offset), 0);
  }
  void linear(const std::string& name, const LinearParams<T>& p) {
    report.add(name, numel_of(p.weight) + numel_of(p.bias), numel_of(p.weight) * positions());
  }
  // Advances (h, w) to the conv's output extent.
  void conv(const std::string& name, const Conv2dParams<T>& p) {
    h = conv_output_extent(h, p.kernel(), p.stride, p.padding);
    w = conv_output_extent(w, p.kernel(), p.stride, p.padding);
    report.add(name, numel_of(p.weight) + numel_of(p.bias), numel_of(p.weight) * positions());
  }
  void free(const std::string& name, std::uint64_t flops) { report.add(name, 0, flops); }
};

std::uint64_t window_pairs(std::size_t h, std::size_t w, std::size_t size) {
  std::uint64_t total = 0;
  for (std::size_t y = 0; y < h; y += size) {
    for (std::size_t x = 0; x < w; x += size) {
      const std::uint64_t m = std::uint64_t(std::min(size, h - y)) * std::min(size, w - x);
      total += m * m;
    }
  }
  return total;
}

}  // namespace

template <typename T>
CostReport count_flops(const BasicModel<T>& m, std::size_t height, std::size_t width) {
  if (height == 0 || width == 0 || height % 32 != 0 || width % 32 != 0) {
    throw DimensionError("count_flops: input " + std::to_string(height) + "x" +
                         std::to_string(width) + " not divisible by 32");
  }
  CostReport report;
  report.input_h = height;
  report.input_w = width;
  Walker<T> walk{report, height, width};

  for (std::size_t i = 0; i < m.stem.convs.size(); ++i) {
    walk.conv("stem.conv" + std::to_string(i), m.stem.convs[i]);
    if (i < m.stem.norms.size()) {
      walk.norm("stem.norm" + std::to_string(i), m.stem.norms[i].gain, m.stem.norms[i].offset);
    }
  }
  for (std::size_t s = 0; s < 4; ++s) {
    const std::string stage = "stage" + std::to_string(s + 1);
    for (std::size_t j = 0; j < m.stages[s].blocks.size(); ++j) {
      const std::string block = stage + ".block" + std::to_string(j);
      const CloBlockParams<T>& b = m.stages[s].blocks[j];
      const std::uint64_t tokens = walk.positions();
      walk.norm(block + ".norm1", b.norm_gain, b.norm_offset);
      walk.linear(block + ".qkv", b.qkv);
      if (b.local) {
        const AttnConvParams<T>& l = *b.local;
        if (l.dw_q) walk.conv(block + ".local.dw_q", *l.dw_q);
        if (l.dw_k) walk.conv(block + ".local.dw_k", *l.dw_k);
        if (l.dw_v) walk.conv(block + ".local.dw_v", *l.dw_v);
        for (std::size_t f = 0; f < l.fcs.size(); ++f)
          walk.linear(block + ".local.fc" + std::to_string(f + 1), l.fcs[f]);
        const LocalKind kind = l.config.kind;
        if (kind == LocalKind::kWindowAttn || kind == LocalKind::kWindowAttnPlusShared) {
          walk.free(block + ".local.window_attn",
                    2 * l.channels * window_pairs(walk.h, walk.w, l.kernel));
        }
      }
      if (b.global_channels > 0) {
        const std::size_t st = b.pool_stride;
        if (walk.h % st != 0 || walk.w % st != 0) {
          throw DimensionError(block + ": pool stride " + std::to_string(st) +
                               " does not divide " + std::to_string(walk.h) + "x" +
                               std::to_string(walk.w));
        }
        if (st > 1) walk.free(block + ".global.pool", 2 * b.global_channels * tokens);
        const std::uint64_t keys = std::uint64_t(walk.h / st) * (walk.w / st);
        walk.free(block + ".global.attn", 2 * tokens * keys * b.global_channels);
      }
      walk.linear(block + ".fuse", b.fuse);

      const ConvFFNParams<T>& f = m.stages[s].ffns[j];
      const std::string ffn = stage + ".ffn" + std::to_string(j);
      walk.norm(block + ".norm2", f.norm_gain, f.norm_offset);
      const std::size_t in_h = walk.h;
      const std::size_t in_w = walk.w;
      walk.linear(ffn + ".fc_in", f.fc_in);
      walk.conv(ffn + ".dw", f.dw);
      walk.linear(ffn + ".fc_out", f.fc_out);
      if (f.skip_conv) {
        const std::size_t out_h = walk.h;
        const std::size_t out_w = walk.w;
        walk.h = in_h;
        walk.w = in_w;
        walk.conv(ffn + ".skip_conv", *f.skip_conv);
        if (walk.h != out_h || walk.w != out_w) {
          throw DimensionError(ffn + ": skip and main paths disagree on output extent");
        }
      }
      if (f.skip_fc) walk.linear(ffn + ".skip_fc", *f.skip_fc);
    }
  }
  walk.free("head.pool", std::uint64_t(m.head.in_features()) * walk.positions());
  walk.h = walk.w = 1;
  walk.linear("head", m.head);
  return report;
}

template CostReport count_params(const BasicModel<float>&);
template CostReport count_params(const BasicModel<double>&);
template CostReport count_flops(const BasicModel<float>&, std::size_t, std::size_t);
template CostReport count_flops(const BasicModel<double>&, std::size_t, std::size_t);

}  // namespace clo

// Copyright 2026 The vertiformer Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstring>
#include <vector>

#include "model/baselines.h"
#include "model/params.h"
#include "model/vertiformer.h"

using namespace vtf;
using namespace vtf::model;
using ad::Tensor;

namespace {

ModelConfig tiny() {
  ModelConfig c;
  c.d_model = 8;
  c.enc_layers = 1;
  c.dec_layers = 1;
  c.heads = 2;
  c.mlp_dim = 8;
  c.dropout = 0.0;
  c.history = 2;
  c.horizon = 2;
  c.n_context = 2;
  c.patch_cells = 4;
  c.final_norm = true;
  c.patch_head = false;
  return c;
}

ForwardInputs rand_inputs(const ModelConfig& c, Rng& rng, int B) {
  ForwardInputs in;
  in.hist_actions = Tensor::randn({B, c.history, 2}, rng);
  in.hist_deltas = Tensor::randn({B, c.history, 6}, rng);
  in.hist_patches = Tensor::randn({B, c.history, c.patch_dim()}, rng);
  in.fut_actions = Tensor::randn({B, c.horizon, 2}, rng);
  in.fut_deltas = Tensor::randn({B, c.horizon, 6}, rng);
  return in;
}

bool bits_equal(const Tensor& a, const Tensor& b) {
  if (a.numel() != b.numel()) return false;
  return std::memcmp(a.data().data(), b.data().data(),
                     sizeof(double) * a.numel()) == 0;
}

}  // namespace

TEST_CASE("config validation and parameter counts") {
  ModelConfig c = tiny();
  CHECK_NOTHROW(c.validate());
  CHECK(c.d_e() == c.d_model / 2);
  CHECK(c.patch_dim() == 16);

  ModelConfig bad = c;
  bad.d_model = 10;
  bad.heads = 4;  // 10 heads of 2.5 dims each: rejected
  CHECK_THROWS(bad.validate());
  ModelConfig bad2 = c;
  bad2.n_context = 1;  // < horizon
  CHECK_THROWS(bad2.validate());

  const VertiFormerParams p = VertiFormerParams::init(c, 7);
  CHECK(vertiformer_param_count(c) == p.store.param_count());

  const ModelConfig desk;
  const VertiFormerParams pd = VertiFormerParams::init(desk, 7);
  CHECK(pd.store.param_count() == 149384);
  CHECK(vertiformer_param_count(desk) == 149384);

  const ModelConfig paper = paper_model_config();
  CHECK(paper.d_model == 512);
  CHECK(paper.enc_layers == 6);
  CHECK(paper.dec_layers == 4);
  CHECK(paper.heads == 8);
  CHECK(paper.mlp_dim == 512);
  CHECK(paper.dropout == 0.3);
  CHECK(paper.history == 6);
  CHECK(paper.horizon == 3);
  CHECK(paper.n_context == 3);
  CHECK(vertiformer_param_count(paper) ==
        VertiFormerParams::init(paper, 1).store.param_count());
}

TEST_CASE("sinusoidal positional encoding hand values") {
  const Tensor none;
  const Tensor rows = positional_encoding_rows(PeKind::sinusoidal, 0, 2, 4, none);
  REQUIRE(rows.numel() == 8);
  const auto v = rows.data();
  // Position 0: [sin 0, cos 0, sin 0, cos 0].
  CHECK(v[0] == 0.0);
  CHECK(v[1] == 1.0);
  CHECK(v[2] == 0.0);
  CHECK(v[3] == 1.0);
  // Position 1 with d=4: wavelength pair at 10000^(2/4) = 100.
  CHECK(v[4] == doctest::Approx(std::sin(1.0)).epsilon(1e-12));
  CHECK(v[5] == doctest::Approx(std::cos(1.0)).epsilon(1e-12));
  CHECK(v[6] == doctest::Approx(std::sin(0.01)).epsilon(1e-12));
  CHECK(v[7] == doctest::Approx(std::cos(0.01)).epsilon(1e-12));

  // A shifted window reproduces the same absolute positions.
  const Tensor shifted =
      positional_encoding_rows(PeKind::sinusoidal, 1, 1, 4, none);
  CHECK(bits_equal(shifted, ad::slice(rows, 0, 1, 1)));
}

TEST_CASE("learnable positional encoding slices its table") {
  const Tensor table =
      Tensor::from_data({3, 2}, {1.0, 2.0, 3.0, 4.0, 5.0, 6.0});
  const Tensor mid = positional_encoding_rows(PeKind::learnable, 1, 2, 2, table);
  const auto v = mid.data();
  CHECK(v[0] == 3.0);
  CHECK(v[1] == 4.0);
  CHECK(v[2] == 5.0);
  CHECK(v[3] == 6.0);
  CHECK_THROWS(positional_encoding_rows(PeKind::learnable, 2, 2, 2, table));
}

TEST_CASE("causal mask underflows to exactly zero attention") {
  const Tensor m = causal_mask(2, 3, ad::DType::f64);
  const auto v = m.data();
  CHECK(v[0] == 0.0);
  CHECK(v[1] == kMaskLogit);
  CHECK(v[2] == kMaskLogit);
  CHECK(v[3] == 0.0);
  CHECK(v[4] == 0.0);
  CHECK(v[5] == kMaskLogit);

  // The masked logit is extreme enough that softmax gives a bit-exact zero.
  const Tensor row = ad::softmax(Tensor::from_data({2}, {0.0, kMaskLogit}), -1);
  CHECK(row.data()[0] == 1.0);
  CHECK(row.data()[1] == 0.0);
}

TEST_CASE("maybe_dropout is identity outside training") {
  Rng rng(3);
  const Tensor x = Tensor::randn({4, 4}, rng);
  DropoutCtx eval_ctx;  // training=false
  CHECK(bits_equal(maybe_dropout(x, eval_ctx), x));
  DropoutCtx zero_rate{true, 0.0, &rng};
  CHECK(bits_equal(maybe_dropout(x, zero_rate), x));
  DropoutCtx half{true, 0.5, &rng};
  const Tensor y = maybe_dropout(x, half);
  // Some entries zeroed, survivors rescaled by 2.
  int zeros = 0, scaled = 0;
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    if (y.data()[i] == 0.0) ++zeros;
    if (y.data()[i] == 2.0 * x.data()[i] && x.data()[i] != 0.0) ++scaled;
  }
  CHECK(zeros > 0);
  CHECK(scaled > 0);
  CHECK(zeros + scaled == x.numel());
}

TEST_CASE("forward shapes across all modes; patch head optional") {
  const ModelConfig c = tiny();
  const VertiFormerParams p = VertiFormerParams::init(c, 7);
  Rng rng(11);
  DropoutCtx ctx;
  const ForwardInputs in = rand_inputs(c, rng, 3);
  ad::NoGradGuard g;
  for (Mode m : {Mode::fkd, Mode::ikd, Mode::bc, Mode::warmup}) {
    const auto out = vertiformer_forward(in, m, p, ctx);
    CHECK(out.pose_deltas.shape() == (ad::Shape{3, 2, 6}));
    CHECK(out.actions.shape() == (ad::Shape{3, 2, 2}));
    CHECK(!out.patches.defined());
    for (double a : out.actions.data()) {
      CHECK(a >= -1.0);
      CHECK(a <= 1.0);
    }
  }
  ModelConfig cp = c;
  cp.patch_head = true;
  const VertiFormerParams pp = VertiFormerParams::init(cp, 7);
  const auto out = vertiformer_forward(in, Mode::warmup, pp, ctx);
  CHECK(out.patches.shape() == (ad::Shape{3, 2, cp.patch_dim()}));
}

TEST_CASE("mode masking is bit-invariant to the masked modality") {
  const ModelConfig c = tiny();
  const VertiFormerParams p = VertiFormerParams::init(c, 7);
  Rng rng(11);
  DropoutCtx ctx;
  ad::NoGradGuard g;
  for (int trial = 0; trial < 10; ++trial) {
    const ForwardInputs in = rand_inputs(c, rng, 3);

    // fkd reads future actions only: replacing fut_deltas changes nothing.
    ForwardInputs alt = in;
    alt.fut_deltas = Tensor::randn({3, c.horizon, 6}, rng);
    auto a = vertiformer_forward(in, Mode::fkd, p, ctx);
    auto b = vertiformer_forward(alt, Mode::fkd, p, ctx);
    CHECK(bits_equal(a.pose_deltas, b.pose_deltas));
    CHECK(bits_equal(a.actions, b.actions));

    // ikd reads future poses only.
    ForwardInputs alt2 = in;
    alt2.fut_actions = Tensor::randn({3, c.horizon, 2}, rng);
    auto a2 = vertiformer_forward(in, Mode::ikd, p, ctx);
    auto b2 = vertiformer_forward(alt2, Mode::ikd, p, ctx);
    CHECK(bits_equal(a2.pose_deltas, b2.pose_deltas));
    CHECK(bits_equal(a2.actions, b2.actions));

    // bc masks both future modalities.
    ForwardInputs alt3 = alt2;
    alt3.fut_deltas = alt.fut_deltas;
    auto a3 = vertiformer_forward(in, Mode::bc, p, ctx);
    auto b3 = vertiformer_forward(alt3, Mode::bc, p, ctx);
    CHECK(bits_equal(a3.pose_deltas, b3.pose_deltas));
    CHECK(bits_equal(a3.actions, b3.actions));

    // warmup reads both: substituting either must change the outputs.
    auto a4 = vertiformer_forward(in, Mode::warmup, p, ctx);
    auto b4 = vertiformer_forward(alt3, Mode::warmup, p, ctx);
    CHECK(!bits_equal(a4.pose_deltas, b4.pose_deltas));
  }
}

TEST_CASE("future-step causality is bit-exact") {
  ModelConfig c = tiny();
  c.horizon = 3;
  c.n_context = 3;
  const VertiFormerParams p = VertiFormerParams::init(c, 7);
  Rng rng(13);
  DropoutCtx ctx;
  ad::NoGradGuard g;
  for (int trial = 0; trial < 10; ++trial) {
    const ForwardInputs in = rand_inputs(c, rng, 2);
    for (int t = 0; t + 1 < c.horizon; ++t) {
      // Perturb every future action from step t+1 on.
      ForwardInputs alt = in;
      std::vector<double> fa(in.fut_actions.data().begin(),
                             in.fut_actions.data().end());
      for (int b = 0; b < 2; ++b)
        for (int s = t + 1; s < c.horizon; ++s)
          for (int k = 0; k < 2; ++k)
            fa[(b * c.horizon + s) * 2 + k] += rng.uniform(0.5, 1.5);
      alt.fut_actions = Tensor::from_data({2, c.horizon, 2}, fa);
      const auto a = vertiformer_forward(in, Mode::fkd, p, ctx);
      const auto b = vertiformer_forward(alt, Mode::fkd, p, ctx);
      CHECK(bits_equal(ad::slice(a.pose_deltas, 1, 0, t + 1),
                       ad::slice(b.pose_deltas, 1, 0, t + 1)));
      // Sanity: the perturbed tail does respond.
      CHECK(!bits_equal(ad::slice(a.pose_deltas, 1, t + 1, c.horizon - t - 1),
                        ad::slice(b.pose_deltas, 1, t + 1, c.horizon - t - 1)));
    }
  }
}

TEST_CASE("full-loss gradient check against finite differences") {
  const ModelConfig gc = tiny();
  const VertiFormerParams p = VertiFormerParams::init(gc, 7);
  Rng rng(17);
  DropoutCtx ctx;
  const int B = 2;
  auto unpack = [&](const Tensor& x) {
    ForwardInputs u;
    std::int64_t off = 0;
    auto take = [&](std::int64_t n, ad::Shape s) {
      Tensor t = ad::reshape(ad::slice(x, 0, off, n), std::move(s));
      off += n;
      return t;
    };
    u.hist_actions = take(B * gc.history * 2, {B, gc.history, 2});
    u.hist_deltas = take(B * gc.history * 6, {B, gc.history, 6});
    u.hist_patches =
        take(B * gc.history * gc.patch_dim(), {B, gc.history, gc.patch_dim()});
    u.fut_actions = take(B * gc.horizon * 2, {B, gc.horizon, 2});
    u.fut_deltas = take(B * gc.horizon * 6, {B, gc.horizon, 6});
    return u;
  };
  const std::int64_t total =
      B * (gc.history * (2 + 6 + gc.patch_dim()) + gc.horizon * (2 + 6));
  const Tensor tgt_p = Tensor::randn({B, gc.horizon, 6}, rng);
  const Tensor tgt_a = Tensor::randn({B, gc.horizon, 2}, rng);
  auto loss_fn = [&](const Tensor& x) {
    const auto out = vertiformer_forward(unpack(x), Mode::warmup, p, ctx);
    const Tensor dp = ad::sub(out.pose_deltas, tgt_p);
    const Tensor da = ad::sub(out.actions, tgt_a);
    return ad::add(ad::mean_all(ad::mul(dp, dp)),
                   ad::mean_all(ad::mul(da, da)));
  };
  double worst = 0.0;
  for (int trial = 0; trial < 3; ++trial) {
    const Tensor x = Tensor::randn({total}, rng);
    worst = std::max(worst, ad::grad_check(loss_fn, x, 1e-5));
  }
  CHECK(worst < 1e-4);

  // Parameter-side checks: the fusion projection and a mask vector.
  const ForwardInputs fin = rand_inputs(gc, rng, B);
  auto param_loss = [&](const Tensor& w) {
    VertiFormerParams q = p;
    q.w_s = w;
    const auto out = vertiformer_forward(fin, Mode::fkd, q, ctx);
    const Tensor dp = ad::sub(out.pose_deltas, tgt_p);
    const Tensor da = ad::sub(out.actions, tgt_a);
    return ad::add(ad::mean_all(ad::mul(dp, dp)),
                   ad::mean_all(ad::mul(da, da)));
  };
  CHECK(ad::grad_check(param_loss, p.w_s.detach(), 1e-5) < 1e-4);
  auto mask_loss = [&](const Tensor& mv) {
    VertiFormerParams q = p;
    q.mask_p = mv;  // fkd replaces future poses with this vector
    const auto out = vertiformer_forward(fin, Mode::fkd, q, ctx);
    const Tensor dp = ad::sub(out.pose_deltas, tgt_p);
    return ad::mean_all(ad::mul(dp, dp));
  };
  CHECK(ad::grad_check(mask_loss, p.mask_p.detach(), 1e-4) < 1e-4);
}

TEST_CASE("baselines: shapes, counts, and gradient flow") {
  const ModelConfig c = tiny();
  Rng rng(11);
  DropoutCtx ctx;
  const int B = 2;
  const ForwardInputs fin = rand_inputs(c, rng, B);

  EncoderOnlyParams ep = EncoderOnlyParams::init(c, 3);
  CHECK(encoder_only_param_count(c) == ep.store.param_count());
  Rng mrng(5);
  const auto out = encoder_only_forward(fin.hist_actions, fin.hist_deltas,
                                        fin.hist_patches, ep, 0.5, mrng, ctx);
  CHECK(out.recon.shape() == (ad::Shape{B, 2, 8}));
  CHECK(out.fkd_deltas.shape() == (ad::Shape{B, 2, 6}));
  const Tensor d = ad::sub(out.recon, out.recon_target);
  ad::mean_all(ad::mul(ad::mul(d, d), out.mask_flags)).backward();
  CHECK(ep.mask_token.grad_tensor().defined());

  DecoderOnlyParams dp = DecoderOnlyParams::init(c, 3);
  CHECK(decoder_only_param_count(c) == dp.store.param_count());
  const auto dout = decoder_only_forward(fin.hist_actions, fin.hist_deltas,
                                         fin.hist_patches, dp, ctx);
  CHECK(dout.pose_deltas.shape() == (ad::Shape{B, 2, 6}));
  CHECK(dout.actions.shape() == (ad::Shape{B, 2, 2}));

  End2EndParams e2 = End2EndParams::init(c, 3);
  CHECK(end2end_param_count(c) == e2.store.param_count());
  const Tensor pred = end2end_forward(fin.hist_actions, fin.hist_deltas,
                                      fin.hist_patches, fin.fut_actions, e2,
                                      ctx);
  CHECK(pred.shape() == (ad::Shape{B, 2, 6}));
  ad::mean_all(ad::mul(pred, pred)).backward();
  CHECK(e2.conv1_w.grad_tensor().defined());
}

TEST_CASE("decoder baseline is causal over its input sequence") {
  const ModelConfig c = tiny();
  const DecoderOnlyParams dp = DecoderOnlyParams::init(c, 9);
  Rng rng(21);
  DropoutCtx ctx;
  ad::NoGradGuard g;
  const ForwardInputs in = rand_inputs(c, rng, 2);
  // Perturbing the last history step must leave step-0 outputs untouched.
  ForwardInputs alt = in;
  std::vector<double> ha(in.hist_actions.data().begin(),
                         in.hist_actions.data().end());
  for (int b = 0; b < 2; ++b)
    for (int k = 0; k < 2; ++k) ha[(b * c.history + 1) * 2 + k] += 2.0;
  alt.hist_actions = Tensor::from_data({2, c.history, 2}, ha);
  const auto a = decoder_only_forward(in.hist_actions, in.hist_deltas,
                                      in.hist_patches, dp, ctx);
  const auto b = decoder_only_forward(alt.hist_actions, alt.hist_deltas,
                                      alt.hist_patches, dp, ctx);
  CHECK(bits_equal(ad::slice(a.pose_deltas, 1, 0, 1),
                   ad::slice(b.pose_deltas, 1, 0, 1)));
  CHECK(!bits_equal(ad::slice(a.pose_deltas, 1, 1, 1),
                    ad::slice(b.pose_deltas, 1, 1, 1)));
}

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "test_support.hpp"

using namespace cvtomo;
namespace fs = std::filesystem;

namespace {

CampaignConfig small_campaign(const std::string& out) {
  CampaignConfig c;
  c.state = StateSpec{RandomMixed{0.7, 0.9, 21}, 2};
  c.x1 = -6.0;
  c.dx = 0.2;
  c.n_bins = 61;
  c.phases = 10;
  c.p1 = -6.0;
  c.dp = 0.2;
  c.k_max = 100000;
  c.checkpoints = {1000, 10000, 100000};
  c.trials = 3;
  c.seed = 5;
  c.output = out;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cvtomo_test_bench_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST(Campaign, OutputsAreByteIdenticalAcrossRuns) {
  const fs::path a = scratch("a"), b = scratch("b");
  run_campaign(small_campaign(a.string()));
  CampaignConfig second = small_campaign(b.string());
  second.threads = 2;
  run_campaign(second);
  for (const char* f : {"errors_hom.csv", "errors_het.csv"}) {
    const std::string x = slurp(a / f);
    EXPECT_FALSE(x.empty());
    EXPECT_EQ(x, slurp(b / f)) << f;
  }
  EXPECT_TRUE(fs::exists(a / "manifest.json"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Campaign, RowsAverageTrialsAndCrlbScalesInverselyWithCopies) {
  const auto curves = run_campaign(small_campaign(""));
  ASSERT_EQ(curves.size(), 2u);
  for (const auto& curve : curves) {
    ASSERT_EQ(curve.rows.size(), 3u);
    EXPECT_TRUE(std::isfinite(curve.crlb_unit));
    for (const auto& row : curve.rows) {
      ASSERT_EQ(row.trial_errors.size(), 3u);
      double s = 0.0;
      for (double v : row.trial_errors) s += v;
      EXPECT_NEAR(row.mean, s / 3.0, 1e-12 * row.mean);
      EXPECT_NEAR(row.crlb * static_cast<double>(row.copies), curve.crlb_unit, 1e-12 * curve.crlb_unit);
    }
    // errors fall with K on average
    EXPECT_LT(curve.rows.back().mean, curve.rows.front().mean);
  }
}

TEST(Campaign, ManifestRecordsSeedsAndConfig) {
  const fs::path dir = scratch("manifest");
  CampaignConfig c = small_campaign(dir.string());
  c.emit_wigner = true;
  run_campaign(c);
  const auto j = nlohmann::json::parse(slurp(dir / "manifest.json"));
  EXPECT_EQ(j.at("modalities").at("hom").at("trial_seeds").size(), 3u);
  EXPECT_EQ(j.at("checkpoints").get<std::vector<std::int64_t>>(), c.checkpoints);
  const CampaignConfig back = parse_campaign(KeyValueConfig::parse_string(j.at("config").get<std::string>()));
  EXPECT_EQ(to_config_text(campaign_entries(back).section()), to_config_text(campaign_entries(c).section()));
  EXPECT_TRUE(fs::exists(dir / "wigner.csv"));
  fs::remove_all(dir);
}

TEST(Campaign, PureTruthRecordsNoteInsteadOfAborting) {
  CampaignConfig c = small_campaign("");
  c.state = StateSpec{Fock{1}, 3};
  c.modalities = {Modality::heterodyne};
  c.checkpoints = {1000};
  c.trials = 1;
  const auto curves = run_campaign(c);
  EXPECT_TRUE(std::isnan(curves[0].crlb_unit));
  EXPECT_FALSE(curves[0].crlb_note.empty());
}

TEST(CampaignConfig, ParseRoundTripAndValidation) {
  const auto cfg = KeyValueConfig::parse_string(
      "modalities = het\nK_max = 1e6\nE = 2\nseed = 9\ncrlb_max_condition = 1e20\n"
      "[state]\nkind = fock\nn = 5\nn_c = 10\n[mle]\nmax_iters = 300\n");
  const CampaignConfig c = parse_campaign(cfg);
  EXPECT_EQ(c.modalities, std::vector<Modality>{Modality::heterodyne});
  EXPECT_EQ(c.k_max, 1000000);
  EXPECT_EQ(c.crlb.max_condition, 1e20);
  EXPECT_EQ(c.mle.max_iters, 300);
  EXPECT_EQ(c.state.n_c, 10);
  const CampaignConfig back = parse_campaign(campaign_entries(c));
  EXPECT_EQ(to_config_text(campaign_entries(back).section()), to_config_text(campaign_entries(c).section()));
  EXPECT_EQ(state_spec_entries(back.state), state_spec_entries(c.state));

  EXPECT_THROW(parse_campaign(KeyValueConfig::parse_string("bogus = 1\n")), ValidationError);
  EXPECT_THROW(parse_campaign(KeyValueConfig::parse_string("[mle]\nbogus = 1\n")), ValidationError);
  CampaignConfig bad = small_campaign("");
  bad.checkpoints = {1005};
  EXPECT_THROW(bad.validate(), ValidationError);  // not divisible by S
  bad.checkpoints = {1000, 1000};
  EXPECT_THROW(bad.validate(), ValidationError);
  bad.checkpoints = {};
  bad.trials = 0;
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(Campaign, DefaultCheckpointsAreMultiplesOfPhases) {
  CampaignConfig c;
  c.k_max = 1000000;
  const auto ks = c.resolved_checkpoints();
  EXPECT_EQ(ks.back(), 1000000);
  for (auto k : ks) EXPECT_EQ(k % 100, 0);
}

TEST(WignerGrid, NormalizedWithOriginOnGrid) {
  const auto rho = make_state(StateSpec{Fock{1}, 3}).rho;
  const WignerGrid g = wigner_grid(rho, 6.0, 120);
  EXPECT_NEAR(g.values.sum() * g.cell_area, 1.0, 1e-8);
  EXPECT_EQ(g.axis[60], 0.0);
  EXPECT_NEAR(g.values(60, 60), -1.0 / std::numbers::pi, 1e-13);
  EXPECT_THROW(wigner_grid(rho, 6.0, 8), ValidationError);
  std::ostringstream out;
  write_wigner_csv(out, g);
  EXPECT_EQ(out.str().substr(0, 6), "x,p,w\n");
}

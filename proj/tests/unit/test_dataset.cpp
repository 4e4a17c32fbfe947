#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "layoutforge/dataset.hpp"
#include "layoutforge/errors.hpp"
#include "layoutforge/geometry.hpp"
#include "layoutforge/json_io.hpp"
#include "support.hpp"

using namespace layoutforge;
using namespace layoutforge::dataset;
using Catch::Approx;
using lf_test::object;

namespace {

constexpr double kPi = std::numbers::pi;

SceneRecord record(std::string id, Layout layout) {
  SceneRecord r;
  r.scene_id = std::move(id);
  r.layout = std::move(layout);
  return r;
}

// n objects spread on a ring so the clustering flag stays quiet.
Layout spread(RoomType type, int n, double room = 6.0) {
  Layout l = lf_test::room(type, lf_test::rect_floor(room, room));
  for (int i = 0; i < n; ++i) {
    const double a = 2 * kPi * i / n;
    l.objects.push_back(object("o" + std::to_string(i), "cabinet", 0.4, 0.4, 2.0 * std::cos(a), 2.0 * std::sin(a)));
  }
  return l;
}

// Polygon with up to 8 vertices around an arbitrary center.
FloorPlan random_star(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> c(-20, 20), rad(1.0, 4.0);
  std::uniform_int_distribution<int> count(3, 8);
  const int n = count(gen);
  const Vec2 center{c(gen), c(gen)};
  FloorPlan f;
  for (int i = 0; i < n; ++i) {
    const double a = 2 * kPi * i / n;
    const double r = rad(gen);
    f.vertices.push_back(center + Vec2{r * std::cos(a), r * std::sin(a)});
  }
  return f;
}

}  // namespace

TEST_CASE("recenter") {
  SECTION("square floor") {
    auto r = record("s", lf_test::room(RoomType::bedroom, lf_test::rect_floor(4, 4, 2, 2), {object("a", "bed", 1, 1, 1, 1)}));
    r.layout.objects[0].placement.position.z = 0.3;
    const auto out = recenter(r);
    CHECK(out.layout.objects[0].placement.position.x == Approx(-1.0));
    CHECK(out.layout.objects[0].placement.position.y == Approx(-1.0));
    CHECK(out.layout.objects[0].placement.position.z == 0.3);
    CHECK(out.layout.floor.vertices[0].x == Approx(-2.0));
  }
  SECTION("already centered is unchanged") {
    auto r = record("s", lf_test::room(RoomType::bedroom, lf_test::rect_floor(4, 4), {object("a", "bed", 1, 1, 0.5, 0.2)}));
    const auto out = recenter(r);
    CHECK(semantically_equal(out.layout, r.layout, 1e-12));
  }
  SECTION("L-shaped floor") {
    auto r = record("s", lf_test::room(RoomType::bedroom, FloorPlan{{{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}}},
                                       {object("a", "stool", 0.2, 0.2, 0.5, 0.5)}));
    const double c = 2.5 / 3.0;  // area decomposition
    const auto out = recenter(r);
    CHECK(out.layout.objects[0].placement.position.x == Approx(0.5 - c).margin(1e-12));
    CHECK(out.layout.floor.vertices[1].x == Approx(2.0 - c).margin(1e-12));
    CHECK(out.layout.floor.vertices[1].y == Approx(-c).margin(1e-12));
  }
  SECTION("random polygons end centered, idempotent, rigid") {
    std::mt19937_64 gen(42);
    for (int i = 0; i < 100; ++i) {
      auto r = record("s", lf_test::room(RoomType::bedroom, random_star(gen),
                                         {object("a", "x", 0.2, 0.2, 1, 2), object("b", "x", 0.2, 0.2, -3, 5)}));
      const auto out = recenter(r);
      const Vec2 c = geometry::polygon_centroid({out.layout.floor.vertices});
      CHECK(norm(c) < 1e-9);
      CHECK(geometry::polygon_area({out.layout.floor.vertices}) == Approx(geometry::polygon_area({r.layout.floor.vertices})));
      const auto d = [](const Layout& l) {
        return norm(l.objects[0].placement.position.xy() - l.objects[1].placement.position.xy());
      };
      CHECK(d(out.layout) == Approx(d(r.layout)).epsilon(1e-12));
      CHECK(semantically_equal(recenter(out).layout, out.layout, 1e-9));
    }
  }
  SECTION("degenerate floor") {
    auto r = record("s", lf_test::room(RoomType::bedroom, FloorPlan{{{0, 0}, {1, 1}, {2, 2}}}));
    CHECK_THROWS_AS(recenter(r), DegenerateError);
  }
}

TEST_CASE("convert_convention") {
  auto r = record("s", lf_test::room(RoomType::bedroom, lf_test::rect_floor(4, 4), {object("a", "bed", 1, 1, 1, 0.4, 0.5)}));
  r.layout.objects[0].placement.position = {1.0, 0.4, 2.0};

  SECTION("flip adds pi") {
    SourceConvention conv{UpAxis::z_up, RotationUnit::radians, true, Origin::unknown};
    CHECK(convert_convention(r, conv).layout.objects[0].placement.rotation == Approx(0.5 + kPi).margin(1e-12));
    r.layout.objects[0].placement.rotation = kPi;
    CHECK(convert_convention(r, conv).layout.objects[0].placement.rotation == Approx(0.0).margin(1e-12));
  }
  SECTION("y-up permutes axes") {
    SourceConvention conv{UpAxis::y_up, RotationUnit::radians, false, Origin::unknown};
    const Vec3 p = convert_convention(r, conv).layout.objects[0].placement.position;
    CHECK(p == Vec3{1.0, 2.0, 0.4});
  }
  SECTION("degrees become radians") {
    SourceConvention conv{UpAxis::z_up, RotationUnit::degrees, false, Origin::unknown};
    r.layout.objects[0].placement.rotation = 90.0;
    CHECK(convert_convention(r, conv).layout.objects[0].placement.rotation == Approx(kPi / 2).margin(1e-12));
  }
  SECTION("flip twice round trips") {
    SourceConvention flip{UpAxis::z_up, RotationUnit::radians, true, Origin::unknown};
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> ang(0, 2 * kPi);
    for (int i = 0; i < 200; ++i) {
      const double r0 = ang(gen);
      r.layout.objects[0].placement.rotation = r0;
      const double back = convert_convention(convert_convention(r, flip), flip).layout.objects[0].placement.rotation;
      const double diff = std::remainder(back - r0, 2 * kPi);
      CHECK(std::abs(diff) < 1e-12);
    }
  }
}

TEST_CASE("filter_scene population thresholds") {
  const auto verdict = [](RoomType t, int n) { return filter_scene(record("s", spread(t, n))); };
  const auto bed5 = verdict(RoomType::bedroom, 5);
  CHECK_FALSE(bed5.accepted);
  CHECK(bed5.reasons == std::vector{FlawReason::under_populated});
  CHECK(verdict(RoomType::bedroom, 6).accepted);
  CHECK(verdict(RoomType::living_room, 6).accepted);
  CHECK_FALSE(verdict(RoomType::living_room, 5).accepted);
  const auto kitchen3 = verdict(RoomType::kitchen, 3);
  CHECK(kitchen3.accepted);
  CHECK(kitchen3.reasons.empty());
  CHECK_FALSE(verdict(RoomType::kitchen, 2).accepted);
  CHECK_FALSE(verdict(RoomType::bathroom, 1).accepted);
  CHECK(verdict(RoomType::bathroom, 2).accepted);
}

TEST_CASE("filter_scene advisory flags") {
  SECTION("clustered objects are flagged but kept") {
    Layout l = lf_test::room(RoomType::kitchen, lf_test::rect_floor(8, 8));
    for (int i = 0; i < 4; ++i) l.objects.push_back(object("o" + std::to_string(i), "cabinet", 0.3, 0.3, 0.4 * (i % 2), 0.4 * (i / 2)));
    const auto v = filter_scene(record("s", l));
    CHECK(v.accepted);
    CHECK(std::count(v.reasons.begin(), v.reasons.end(), FlawReason::clustered) == 1);
    CHECK(v.metrics.at("dispersion_ratio") < 0.25);
  }
  SECTION("chair facing away from the desk") {
    Layout l = spread(RoomType::kitchen, 3);
    l.objects.push_back(object("desk", "desk", 1.2, 0.6, 0.0, 0.0));
    // Facing +y at rotation 0; the desk sits below, so rotate to face it.
    l.objects.push_back(object("chair_ok", "chair", 0.5, 0.5, 0.0, 0.9, kPi));
    CHECK(filter_scene(record("s", l)).metrics.at("suspect_chairs") == 0.0);
    l.objects.back().placement.rotation = 0.0;
    const auto v = filter_scene(record("s", l));
    CHECK(v.metrics.at("suspect_chairs") == 1.0);
    CHECK(v.accepted);
    CHECK(std::count(v.reasons.begin(), v.reasons.end(), FlawReason::orientation_suspect) == 1);
  }
  SECTION("count mismatch rejects") {
    auto r = record("s", spread(RoomType::kitchen, 3));
    r.requested = {{"cabinet", 4, std::nullopt, std::nullopt}};
    const auto v = filter_scene(r);
    CHECK_FALSE(v.accepted);
    CHECK(v.reasons == std::vector{FlawReason::count_mismatch});
  }
}

TEST_CASE("corpus_stats") {
  CHECK(corpus_stats({}).scene_count == 0);
  std::vector<SceneRecord> corpus = {record("a", spread(RoomType::bedroom, 4)), record("b", spread(RoomType::bedroom, 6)),
                                     record("c", spread(RoomType::kitchen, 8))};
  const auto s = corpus_stats(corpus);
  CHECK(s.scene_count == 3);
  CHECK(s.object_count == 18);
  CHECK(s.room_fractions.at(RoomType::bedroom) == Approx(2.0 / 3.0));
  CHECK(s.room_fractions.at(RoomType::kitchen) == Approx(1.0 / 3.0));
  CHECK(s.objects_per_scene.median == 6.0);
  CHECK(s.objects_per_scene.min == 4.0);
  CHECK(s.objects_per_scene.max == 8.0);
  CHECK(s.distinct_descriptions == 1);

  // Partitioned accumulation gives the same report.
  CorpusStatsBuilder left, right;
  left.add(corpus[2]);
  right.add(corpus[0]);
  right.add(corpus[1]);
  left.merge(right);
  CHECK(to_json(left.finish()) == to_json(s));
}

TEST_CASE("quartiles interpolate") {
  const auto q = quartiles({1, 2, 3, 4});
  CHECK(q.q1 == Approx(1.75));
  CHECK(q.median == Approx(2.5));
  CHECK(q.q3 == Approx(3.25));
}

TEST_CASE("split_corpus") {
  std::vector<SceneRecord> corpus;
  for (int i = 0; i < 5; ++i) corpus.push_back(record("bed" + std::to_string(i), spread(RoomType::bedroom, 6)));
  corpus.push_back(record("k0", spread(RoomType::kitchen, 3)));
  const auto a = split_corpus(corpus, 7, {{RoomType::bedroom, 2}});
  const auto b = split_corpus(corpus, 7, {{RoomType::bedroom, 2}});
  CHECK(a.test.size() == 2);
  CHECK(a.train.size() == 4);
  std::vector<std::string> ids_a, ids_b;
  for (const auto& r : a.test) ids_a.push_back(r.scene_id);
  for (const auto& r : b.test) ids_b.push_back(r.scene_id);
  CHECK(ids_a == ids_b);
  std::set<std::string> all;
  for (const auto& r : a.train) all.insert(r.scene_id);
  for (const auto& r : a.test) CHECK(all.insert(r.scene_id).second);
  CHECK(all.size() == corpus.size());
  CHECK_THROWS_AS(split_corpus(corpus, 7, {{RoomType::bedroom, 6}}), InsufficientDataError);
  CHECK_THROWS_AS(split_corpus(corpus, 7, {{RoomType::bathroom, 1}}), InsufficientDataError);

  // Different seeds eventually pick different scenes.
  bool varied = false;
  for (std::uint64_t seed = 0; seed < 20 && !varied; ++seed) {
    const auto c = split_corpus(corpus, seed, {{RoomType::bedroom, 2}});
    std::vector<std::string> ids;
    for (const auto& r : c.test) ids.push_back(r.scene_id);
    varied = ids != ids_a;
  }
  CHECK(varied);
}

TEST_CASE("split plans at the reference test-set sizes") {
  std::vector<SceneRecord> corpus;
  for (int i = 0; i < 600; ++i) corpus.push_back(record("b" + std::to_string(i), spread(RoomType::bedroom, 6)));
  for (int i = 0; i < 80; ++i) corpus.push_back(record("l" + std::to_string(i), spread(RoomType::living_room, 6)));
  const auto s = split_corpus(corpus, 1, parse_split_plan("bedroom=423,living_room=53"));
  CHECK(s.test.size() == 476);
  CHECK(std::count_if(s.test.begin(), s.test.end(), [](const auto& r) { return r.layout.room_type == RoomType::bedroom; }) == 423);
  CHECK(s.train.size() == 204);
  CHECK_THROWS_AS(parse_split_plan("bedroom"), SchemaError);
  CHECK_THROWS_AS(parse_split_plan("bedroom=-1"), SchemaError);
}

TEST_CASE("ingest a y-up scene") {
  const auto j = json_io::Json::parse(json_io::read_text_file(lf_test::data_dir() / "fixtures/scenes/front_bedroom.json"));
  const auto r = ingest_scene(j, SceneSource::three_d_front, {}, "fallback");
  CHECK(r.scene_id == "front-0001");
  CHECK(r.layout.room_type == RoomType::bedroom);
  // The lamp falls under the small-object cutoff.
  CHECK(r.layout.objects.size() == 6);
  const auto& bed = r.layout.objects[0];
  CHECK(bed.size == BoxSize{1.6, 2.0, 0.5});
  CHECK(bed.placement.position.x == Approx(0.0).margin(1e-12));
  CHECK(bed.placement.position.y == Approx(0.8).margin(1e-12));
  CHECK(bed.placement.position.z == Approx(0.25));
  CHECK(bed.placement.rotation == Approx(kPi).margin(1e-12));
  CHECK(norm(geometry::polygon_centroid({r.layout.floor.vertices})) < 1e-9);
  CHECK(filter_scene(r).accepted);
}

TEST_CASE("ingest a degree, flipped scene") {
  const auto j = json_io::Json::parse(json_io::read_text_file(lf_test::data_dir() / "fixtures/scenes/holodeck_kitchen.json"));
  const auto r = ingest_scene(j, SceneSource::holodeck_synth, {}, "fallback");
  CHECK(r.scene_id == "holo-kitchen-7");
  REQUIRE(r.layout.objects.size() == 4);
  CHECK(r.layout.objects[0].description == "fridge");
  CHECK(r.layout.objects[2].description == "dining table");
  CHECK(r.layout.objects[0].placement.rotation == Approx(kPi).margin(1e-12));
  CHECK(r.layout.objects[2].placement.rotation == Approx(1.5 * kPi).margin(1e-12));
  CHECK(r.layout.objects[3].placement.rotation == Approx(0.0).margin(1e-12));
  CHECK(r.semantic_summary.has_value());
  CHECK(r.requested.size() == 4);
  CHECK(filter_scene(r).accepted);
}

TEST_CASE("pipeline config") {
  const auto cfg = config_from_json(json_io::Json::parse(
      R"({"filter":{"min_objects":{"bedroom":3},"clustering_threshold":0.1},
          "conventions":{"holodeck_synth":{"rotation_unit":"radians","rotation_flip":false}}})"));
  CHECK(cfg.rules.min_objects.at(RoomType::bedroom) == 3);
  CHECK(cfg.rules.min_objects.at(RoomType::kitchen) == 3);
  CHECK(cfg.rules.clustering_threshold == 0.1);
  CHECK(cfg.conventions.at(SceneSource::holodeck_synth).rotation_unit == RotationUnit::radians);
  CHECK_FALSE(cfg.conventions.at(SceneSource::holodeck_synth).rotation_flip);
  CHECK_THROWS_AS(config_from_json(json_io::Json::parse(R"({"conventions":{"generated":{"up_axis":"w"}}})")), SchemaError);
}

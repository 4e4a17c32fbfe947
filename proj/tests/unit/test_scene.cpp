#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "layoutforge/errors.hpp"
#include "layoutforge/json_io.hpp"
#include "layoutforge/scene.hpp"
#include "support.hpp"

using namespace layoutforge;
using Catch::Approx;

namespace {

const char* kOneObject = R"({
  "room_type": "bedroom",
  "floor": {"vertices": [[-2,-2],[2,-2],[2,2],[-2,2]]},
  "objects": [{"instance_id": "bed_0", "description": "double bed",
               "bbox": {"width": 1.8, "depth": 2.0, "height": 0.5},
               "coordinates": {"x": 1.0, "y": 2.0, "z": 0.0},
               "rotate": {"angle": 3.14159},
               "note": "ignored"}]
})";

}  // namespace

TEST_CASE("parse_layout reads the object schema") {
  const Layout l = parse_layout(kOneObject);
  REQUIRE(l.objects.size() == 1);
  CHECK(l.objects[0].placement.position.x == 1.0);
  CHECK(l.objects[0].placement.position.y == 2.0);
  CHECK(l.objects[0].placement.rotation == Approx(3.14159).margin(1e-12));
  CHECK(l.objects[0].size == BoxSize{1.8, 2.0, 0.5});
}

TEST_CASE("parse_layout normalizes rotation") {
  std::string doc = kOneObject;
  doc.replace(doc.find("3.14159"), 7, "7.0");
  CHECK(parse_layout(doc).objects[0].placement.rotation == Approx(7.0 - 2 * std::numbers::pi).margin(1e-12));
  doc.replace(doc.find("7.0"), 3, "-1.0");
  CHECK(parse_layout(doc).objects[0].placement.rotation == Approx(2 * std::numbers::pi - 1.0).margin(1e-12));
}

TEST_CASE("parse_layout errors") {
  std::string missing_rotate = kOneObject;
  missing_rotate.erase(missing_rotate.find("\"rotate\""), std::string(R"("rotate": {"angle": 3.14159},)").size());
  CHECK_THROWS_AS(parse_layout(missing_rotate), SchemaError);

  std::string zero_size = kOneObject;
  zero_size.replace(zero_size.find("1.8"), 3, "0.0");
  CHECK_THROWS_AS(parse_layout(zero_size), ValueError);

  CHECK_THROWS_AS(parse_layout("{not json"), SchemaError);
  CHECK_THROWS_AS(parse_layout(R"({"room_type":"garage","floor":{"vertices":[[0,0],[1,0],[1,1]]},"objects":[]})"),
                  SchemaError);
}

TEST_CASE("floors must be simple with nonzero area") {
  CHECK_THROWS_AS(check_floor(FloorPlan{{{0, 0}, {1, 0}}}), ValueError);
  CHECK_THROWS_AS(check_floor(FloorPlan{{{0, 0}, {1, 0}, {2, 0}}}), ValueError);
  // Bow tie.
  CHECK_THROWS_AS(check_floor(FloorPlan{{{0, 0}, {1, 1}, {1, 0}, {0, 1}}}), ValueError);
  CHECK_NOTHROW(check_floor(lf_test::rect_floor(3, 4)));
}

TEST_CASE("duplicate instance ids are rejected") {
  auto l = lf_test::room(RoomType::bedroom, lf_test::rect_floor(4, 4),
                         {lf_test::object("a", "bed", 1, 1, 0, 0), lf_test::object("a", "desk", 1, 1, 1, 1)});
  CHECK_THROWS_AS(check_layout(l), SchemaError);
}

TEST_CASE("serialize_layout round trip") {
  SECTION("empty object list") {
    const auto l = lf_test::room(RoomType::kitchen, lf_test::rect_floor(3, 3));
    const auto j = json_io::Json::parse(serialize_layout(l));
    CHECK(j.at("objects").is_array());
    CHECK(j.at("objects").empty());
  }
  SECTION("zero rotation is written as 0.0") {
    const auto l = lf_test::room(RoomType::kitchen, lf_test::rect_floor(3, 3), {lf_test::object("a", "stove", 1, 1, 0, 0)});
    CHECK(serialize_layout(l).find("\"angle\": 0.0") != std::string::npos);
  }
  SECTION("random layouts") {
    std::mt19937_64 gen(11);
    for (int i = 0; i < 200; ++i) {
      Layout l = lf_test::random_clean_layout(gen);
      std::uniform_real_distribution<double> ang(0, 2 * std::numbers::pi);
      for (auto& o : l.objects) o.placement.rotation = normalize_angle(ang(gen));
      CHECK(semantically_equal(parse_layout(serialize_layout(l)), l));
    }
  }
}

TEST_CASE("normalize_angle is idempotent and lands in [0, 2pi)") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> any(-100, 100);
  for (int i = 0; i < 1000; ++i) {
    const double r = normalize_angle(any(gen));
    CHECK(r >= 0.0);
    CHECK(r < 2 * std::numbers::pi);
    CHECK(normalize_angle(r) == r);
  }
  CHECK(normalize_angle(2 * std::numbers::pi) == 0.0);
  CHECK(normalize_angle(-0.0) == 0.0);
}

TEST_CASE("retrieve_boxes") {
  AssetCatalog catalog;
  catalog.add("double bed", {{1.8, 2.0, 0.5}, "bed"});
  catalog.add("office chair", {{0.6, 0.6, 1.0}, "chair"});

  SECTION("exact match") {
    auto out = retrieve_boxes({{"double bed", 1, std::nullopt, std::nullopt}}, catalog);
    CHECK(out[0].size == BoxSize{1.8, 2.0, 0.5});
  }
  SECTION("case-insensitive token overlap keeps quantity and description") {
    auto out = retrieve_boxes({{"Wooden CHAIR", 3, std::nullopt, std::nullopt}}, catalog);
    CHECK(out[0].size == BoxSize{0.6, 0.6, 1.0});
    CHECK(out[0].quantity == 3);
    CHECK(out[0].description == "Wooden CHAIR");
  }
  SECTION("sized specs pass through") {
    auto out = retrieve_boxes({{"double bed", 1, BoxSize{1, 1, 1}, std::nullopt}}, catalog);
    CHECK(out[0].size == BoxSize{1, 1, 1});
  }
  SECTION("no shared token") {
    CHECK_THROWS_AS(retrieve_boxes({{"flying carpet", 1, std::nullopt, std::nullopt}}, catalog), NoMatchError);
  }
}

TEST_CASE("builtin catalog loads with positive sizes") {
  const auto& c = AssetCatalog::builtin();
  REQUIRE_FALSE(c.empty());
  for (const auto& [name, entry] : c.entries()) {
    INFO(name);
    CHECK_NOTHROW(check_size(entry.size));
  }
}

TEST_CASE("task_from_layout groups identical instances") {
  auto l = lf_test::room(RoomType::bedroom, lf_test::rect_floor(4, 4),
                         {lf_test::object("n0", "nightstand", 0.5, 0.4, -1, 1), lf_test::object("n1", "nightstand", 0.5, 0.4, 1, 1),
                          lf_test::object("b0", "bed", 1.6, 2.0, 0, 0)});
  const TaskSpec t = task_from_layout(l, "keep it");
  REQUIRE(t.objects.size() == 2);
  CHECK(t.objects[0].description == "nightstand");
  CHECK(t.objects[0].quantity == 2);
  CHECK(t.instruction == "keep it");
  CHECK(expand_instances(t.objects).size() == 3);
}

TEST_CASE("corpus JSONL round trip and duplicate ids") {
  SceneRecord r;
  r.scene_id = "s1";
  r.semantic_summary = "a small kitchen";
  r.layout = lf_test::room(RoomType::kitchen, lf_test::rect_floor(3, 3), {lf_test::object("f", "fridge", 0.7, 0.7, 1, 1)});
  const std::string text = json_io::format_corpus({r, r});
  CHECK_THROWS_AS(json_io::parse_corpus(text), SchemaError);
  r.scene_id = "s2";
  SceneRecord first = r;
  first.scene_id = "s1";
  const auto back = json_io::parse_corpus(json_io::format_corpus({first, r}));
  REQUIRE(back.size() == 2);
  CHECK(back[1].semantic_summary == "a small kitchen");
  CHECK(semantically_equal(back[0].layout, first.layout));
}

TEST_CASE("room type spellings") {
  CHECK(parse_room_type("Living Room") == RoomType::living_room);
  CHECK(parse_room_type("living-room") == RoomType::living_room);
  CHECK(parse_room_type("BEDROOM") == RoomType::bedroom);
  CHECK_THROWS_AS(parse_room_type("attic"), SchemaError);
}

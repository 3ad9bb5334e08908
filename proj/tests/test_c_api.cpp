// Copyright 2026 The DynView Authors.
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

#include <doctest.h>

#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dynview/dynview.h"
#include "fixtures.hpp"

using nlohmann::json;

namespace {

// Takes ownership of a string returned by the library.
std::string take(char* s) {
  REQUIRE(s != nullptr);
  std::string out(s);
  dv_string_free(s);
  return out;
}

struct ImageHandle {
  dv_image* ptr = nullptr;
  ~ImageHandle() { dv_image_free(ptr); }
};

struct GridHandle {
  dv_grid* ptr = nullptr;
  ~GridHandle() { dv_grid_free(ptr); }
};

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::string(dv_version()) == "1.0.0");
  CHECK(std::string(dv_status_name(DV_OK)) == "ok");
  CHECK(std::string(dv_status_name(DV_ERROR_PARSE)) == "parse error");
  dv_set_log_level("error");
  dv_set_log_level("nonsense");
  dv_set_log_level(nullptr);
  dv_string_free(nullptr);
  dv_image_free(nullptr);
  dv_grid_free(nullptr);
}

TEST_CASE("image loading and hashing") {
  fixtures::ScratchDir dir("capi_img");
  const auto path = dir.path() / "a.png";
  dynview::write_png(path, fixtures::texture_image(40, 30, 3, 1));

  ImageHandle img;
  REQUIRE(dv_image_load(path.c_str(), &img.ptr) == DV_OK);
  int w = 0, h = 0, c = 0;
  REQUIRE(dv_image_info(img.ptr, &w, &h, &c) == DV_OK);
  CHECK(w == 40);
  CHECK(h == 30);
  CHECK(c == 3);

  std::uint64_t bits = 0;
  REQUIRE(dv_phash(img.ptr, &bits) == DV_OK);
  char hex[17];
  REQUIRE(dv_phash_hex(img.ptr, hex) == DV_OK);
  CHECK(std::strlen(hex) == 16);
  CHECK(std::stoull(hex, nullptr, 16) == bits);
  CHECK(dv_hamming(bits, bits) == 0);
  CHECK(dv_hamming(0, 0xff) == 8);

  const auto bytes = read_bytes(path);
  ImageHandle decoded;
  REQUIRE(dv_image_decode(bytes.data(), bytes.size(), &decoded.ptr) == DV_OK);
  std::uint64_t bits2 = 0;
  REQUIRE(dv_phash(decoded.ptr, &bits2) == DV_OK);
  CHECK(bits == bits2);

  ImageHandle missing;
  CHECK(dv_image_load((dir.path() / "nope.png").c_str(), &missing.ptr) == DV_ERROR_IO);
  CHECK(std::string(dv_last_error()).find("nope.png") != std::string::npos);
  CHECK(missing.ptr == nullptr);
  const std::uint8_t junk[] = {1, 2, 3};
  CHECK(dv_image_decode(junk, sizeof junk, &missing.ptr) == DV_ERROR_IO);
  CHECK(dv_image_load(nullptr, &missing.ptr) == DV_ERROR_ARGUMENT);
  CHECK(dv_phash(nullptr, &bits) == DV_ERROR_ARGUMENT);
}

TEST_CASE("dv_build_views") {
  const double region[4] = {10, 10, 20, 20};
  const double image[4] = {0, 0, 100, 100};
  char* out = nullptr;
  REQUIRE(dv_build_views(region, image, nullptr, 0, 224, &out) == DV_OK);
  const auto views = json::parse(take(out));
  REQUIRE(views.size() == 11);
  CHECK(views[0]["t"] == 0.0);
  CHECK(views[0]["crop"] == json::array({10.0, 10.0, 20.0, 20.0}));
  CHECK(views[10]["crop"] == json::array({0.0, 0.0, 100.0, 100.0}));
  CHECK(views[5]["out_size"] == 224);

  const double half[1] = {0.5};
  REQUIRE(dv_build_views(region, image, half, 1, 64, &out) == DV_OK);
  const auto two = json::parse(take(out));
  REQUIRE(two.size() == 2);
  CHECK(two[1]["crop"] == json::array({5.0, 5.0, 60.0, 60.0}));

  const double bad_ts[2] = {0.6, 0.3};
  CHECK(dv_build_views(region, image, bad_ts, 2, 64, &out) == DV_ERROR_DOMAIN);
  const double outside[4] = {10, 10, 200, 20};
  CHECK(dv_build_views(outside, image, nullptr, 0, 64, &out) == DV_ERROR_DOMAIN);
  CHECK_FALSE(std::string(dv_last_error()).empty());
}

TEST_CASE("dv_select") {
  fixtures::ScratchDir dir("capi_sel");
  const auto path = dir.path() / "a.png";
  dynview::write_png(path, fixtures::texture_image(64, 48, 3, 2));
  ImageHandle img;
  REQUIRE(dv_image_load(path.c_str(), &img.ptr) == DV_OK);
  const double region[4] = {10, 8, 40, 30};
  char* out = nullptr;

  REQUIRE(dv_select(img.ptr, region, R"({"policy":"task-prior","task":"attribute","n":2})", &out) == DV_OK);
  const auto task = json::parse(take(out));
  CHECK(task["chosen_ts"] == json::array({0.0, 0.1}));

  const auto req = json{{"n", 3}, {"out_size", 32}, {"views_dir", (dir.path() / "v").string()},
                        {"caption", "A white dog lying on a sofa"}, {"vocab", DYNVIEW_DEMO_VOCAB},
                        {"keep_prob", 1.0}, {"image_id", "a"}};
  REQUIRE(dv_select(img.ptr, region, req.dump().c_str(), &out) == DV_OK);
  const auto m = json::parse(take(out));
  CHECK(m["chosen_ts"].size() == 3);
  CHECK(m["chosen_ts"][0] == 0.0);
  CHECK(m["selection"]["policy"] == "image-prior");
  CHECK(m["control_sentence"].get<std::string>().ends_with("[SEP]"));
  for (const auto& p : m["view_paths"]) CHECK(std::filesystem::exists(p.get<std::string>()));

  REQUIRE(dv_select(img.ptr, region, nullptr, &out) == DV_OK);
  CHECK(json::parse(take(out))["chosen_ts"].size() == 3);

  CHECK(dv_select(img.ptr, region, "{not json", &out) == DV_ERROR_ARGUMENT);
  CHECK(dv_select(img.ptr, region, R"({"n":0})", &out) == DV_ERROR_DOMAIN);
  CHECK(dv_select(img.ptr, region, R"({"policy":"psychic"})", &out) == DV_ERROR_DOMAIN);
  CHECK(dv_select(nullptr, region, nullptr, &out) == DV_ERROR_ARGUMENT);
}

namespace {
void count_progress(std::uint64_t, std::uint64_t, void* user) { ++*static_cast<int*>(user); }
}  // namespace

TEST_CASE("dv_batch_run and dv_manifest_read") {
  fixtures::ScratchDir dir("capi_batch");
  const auto ds = fixtures::make_dataset(dir.path(), 8, 2, false, 3);
  const auto output = dir.path() / "out.jsonl";
  const json req{{"annotations", ds.annotations.string()}, {"images_dir", ds.images_dir.string()},
                 {"output", output.string()}, {"views_dir", (dir.path() / "views").string()},
                 {"out_size", 32}, {"jobs", 2}};
  int calls = 0;
  dv_batch_summary s{};
  REQUIRE(dv_batch_run(req.dump().c_str(), count_progress, &calls, &s) == DV_OK);
  CHECK(s.ingested == 8);
  CHECK(s.skipped == 1);
  CHECK(s.emitted == 7);
  CHECK(s.errored == 0);
  CHECK(calls == 7);

  char* out = nullptr;
  REQUIRE(dv_manifest_read(output.c_str(), &out) == DV_OK);
  CHECK(json::parse(take(out)).size() == 7);

  {
    std::ofstream bad(dir.path() / "bad.jsonl");
    bad << R"({"format_version": 99})" << "\n";
  }
  CHECK(dv_manifest_read((dir.path() / "bad.jsonl").c_str(), &out) == DV_ERROR_VERSION);
  CHECK(dv_manifest_read((dir.path() / "none.jsonl").c_str(), &out) == DV_ERROR_IO);
  CHECK(dv_batch_run(R"({"output": "x"})", nullptr, nullptr, &s) == DV_ERROR_ARGUMENT);
  CHECK(dv_batch_run(nullptr, nullptr, nullptr, &s) == DV_ERROR_ARGUMENT);
}

TEST_CASE("grid handles and kernels") {
  const float values[4] = {1, 2, 3, 4};
  GridHandle g;
  REQUIRE(dv_grid_create(2, 2, 1, values, &g.ptr) == DV_OK);
  int h = 0, w = 0, c = 0;
  REQUIRE(dv_grid_info(g.ptr, &h, &w, &c) == DV_OK);
  CHECK(h == 2);
  CHECK(w == 2);
  CHECK(c == 1);

  const double box[4] = {0, 0, 2, 2};
  GridHandle pooled;
  REQUIRE(dv_roi_align(g.ptr, box, 1, 1, 1, &pooled.ptr) == DV_OK);
  CHECK(dv_grid_data(pooled.ptr)[0] == doctest::Approx(2.5));

  const double flat[4] = {0, 0, 0, 2};
  GridHandle none;
  CHECK(dv_roi_align(g.ptr, flat, 1, 1, 1, &none.ptr) == DV_ERROR_DOMAIN);

  GridHandle zeros;
  REQUIRE(dv_grid_create(2, 2, 2, nullptr, &zeros.ptr) == DV_OK);
  GridHandle same;
  REQUIRE(dv_offset_resample(g.ptr, zeros.ptr, &same.ptr) == DV_OK);
  for (int i = 0; i < 4; ++i) CHECK(dv_grid_data(same.ptr)[i] == doctest::Approx(values[i]));
  CHECK(dv_offset_resample(g.ptr, g.ptr, &none.ptr) == DV_ERROR_DOMAIN);

  fixtures::ScratchDir dir("capi_grid");
  const auto path = dir.path() / "g.bin";
  REQUIRE(dv_grid_save(g.ptr, path.c_str()) == DV_OK);
  GridHandle loaded;
  REQUIRE(dv_grid_load(path.c_str(), &loaded.ptr) == DV_OK);
  CHECK(std::memcmp(dv_grid_data(loaded.ptr), values, sizeof values) == 0);
  CHECK(dv_grid_create(0, 2, 1, nullptr, &none.ptr) == DV_ERROR_DOMAIN);
  const float nan_value[1] = {std::numeric_limits<float>::quiet_NaN()};
  CHECK(dv_grid_create(1, 1, 1, nan_value, &none.ptr) == DV_ERROR_DOMAIN);
}

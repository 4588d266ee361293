#include <gtest/gtest.h>

#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include "common.hpp"
#include "crackfield/serialize.hpp"
#include "crackfield/service.hpp"

// after Eigen: <resolv.h> defines a `_res` macro
#include <httplib.h>

using namespace crackfield;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const std::string kData = CRACKFIELD_DATA_DIR;

class ServiceTest : public ::testing::Test {
 protected:
  void SetUp() override { start({}); }
  void TearDown() override { service_.reset(); }

  void start(ServiceOptions o) {
    service_.reset();
    o.port = 0;
    service_ = std::make_unique<Service>(o);
    port_ = service_->start();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    client_->set_read_timeout(30, 0);
  }

  Json json_of(const httplib::Result& r) { return Json::parse(r->body); }

  std::string upload(const std::string& csv, const std::string& query = "") {
    auto r = client_->Post("/api/fields" + query, csv, "text/csv");
    EXPECT_EQ(r->status, 201) << r->body;
    return json_of(r)["id"].get<std::string>();
  }

  httplib::Result put_crack(const std::string& id, const Json& crack) {
    return client_->Put("/api/fields/" + id + "/crack", crack.dump(), "application/json");
  }

  Json wait_job(const std::string& id) {
    for (int i = 0; i < 600; ++i) {
      auto r = client_->Get("/api/jobs/" + id);
      const Json j = json_of(r);
      if (j["status"] != "queued" && j["status"] != "running") return j;
      std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    ADD_FAILURE() << "job " << id << " did not finish";
    return {};
  }

  std::unique_ptr<Service> service_;
  std::unique_ptr<httplib::Client> client_;
  int port_ = 0;
};

const Json kMaterial{{"model", "isotropic"}, {"E", 210e9}, {"nu", 0.3}, {"plane_state", "plane_strain"}};

Json mixed_mode_crack() { return Json::parse(slurp(kData + "/mixed_mode.json"))["crack"]; }

}  // namespace

TEST_F(ServiceTest, UploadReportsGridAndMagnitude) {
  const auto id = upload(slurp(kData + "/mixed_mode.csv"));
  auto meta = client_->Get("/api/fields/" + id);
  ASSERT_EQ(meta->status, 200);
  const Json m = json_of(meta);
  EXPECT_EQ(m["id"], id);
  EXPECT_TRUE(m["has_out_of_plane"].get<bool>());
  auto mag = client_->Get("/api/fields/" + id + "/magnitude");
  ASSERT_EQ(mag->status, 200);
  const Json g = json_of(mag);
  EXPECT_EQ(g["nx"], 51);
  EXPECT_EQ(g["stride"], 1);
  EXPECT_EQ(g["values"].size(), 51u * 51u);
  const auto field = load_field(kData + "/mixed_mode.csv", LengthUnit::m);
  const auto exact = magnitude(field);
  EXPECT_EQ(g["values"][100].get<double>(), exact[100]);
  // identical content shares the cached magnitude payload
  const auto id2 = upload(slurp(kData + "/mixed_mode.csv"));
  EXPECT_NE(id2, id);
  EXPECT_EQ(client_->Get("/api/fields/" + id2 + "/magnitude")->body, mag->body);
}

TEST_F(ServiceTest, MultipartUploadWithUnits) {
  httplib::MultipartFormDataItems items{{"file", crackfield::test::lattice_csv(4, 4, 1.0, false, [](int i, int j) {
                                           return std::to_string(i * 1e-3) + "," + std::to_string(j * 1e-3);
                                         }),
                                         "grid.csv", "text/csv"}};
  auto r = client_->Post("/api/fields?units=um", items);
  ASSERT_EQ(r->status, 201) << r->body;
  const Json j = json_of(r);
  EXPECT_FALSE(j["has_out_of_plane"].get<bool>());
  EXPECT_NEAR(j["grid"]["spacing_x"].get<double>(), 1e-6, 1e-18);
}

TEST_F(ServiceTest, BadUploadsAndUnknownIds) {
  auto r = client_->Post("/api/fields", "X,Y,Ux,Uy\n0,0,1\n", "text/csv");
  EXPECT_EQ(r->status, 400);
  EXPECT_EQ(json_of(r)["error"]["kind"], "MalformedRow");
  EXPECT_EQ(client_->Get("/api/fields/f999")->status, 404);
  EXPECT_EQ(client_->Get("/api/jobs/j999")->status, 404);
  EXPECT_EQ(put_crack("f999", mixed_mode_crack())->status, 404);
}

TEST_F(ServiceTest, CrackPreviewAndErrors) {
  const auto id = upload(slurp(kData + "/mixed_mode.csv"));
  auto r = put_crack(id, mixed_mode_crack());
  ASSERT_EQ(r->status, 200) << r->body;
  const Json j = json_of(r);
  EXPECT_EQ(j["seam_nodes"], 25);
  EXPECT_EQ(j["snapped_chain"].size(), 26u);
  EXPECT_EQ(j["available_contours"], 25);

  auto bad = put_crack(id, Json{{"mouth", {-1e-6, 0.0}}, {"tip", {5e-6, 0.0}}});
  EXPECT_EQ(bad->status, 422);
  EXPECT_EQ(json_of(bad)["error"]["kind"], "TipOutsideGrid");
  EXPECT_EQ(put_crack(id, Json{{"tip", {0.0, 0.0}}})->status, 400);
  EXPECT_EQ(client_->Put("/api/fields/" + id + "/crack", "{not json", "application/json")->status, 400);
}

TEST_F(ServiceTest, JobNeedsCrackAndMaterial) {
  const auto id = upload(slurp(kData + "/mixed_mode.csv"));
  auto r = client_->Post("/api/fields/" + id + "/jobs", Json{{"material", kMaterial}}.dump(), "application/json");
  EXPECT_EQ(r->status, 409);
  ASSERT_EQ(put_crack(id, mixed_mode_crack())->status, 200);
  EXPECT_EQ(client_->Post("/api/fields/" + id + "/jobs", Json{{"kind", "analysis"}}.dump(), "application/json")->status,
            400);
  EXPECT_EQ(client_->Post("/api/fields/" + id + "/jobs", Json{{"kind", "fatigue"}, {"material", kMaterial}}.dump(),
                          "application/json")
                ->status,
            400);
  EXPECT_EQ(client_->Post("/api/fields/f999/jobs", Json{{"material", kMaterial}}.dump(), "application/json")->status,
            404);
}

TEST_F(ServiceTest, AnalysisJobMatchesLibraryRun) {
  const auto id = upload(slurp(kData + "/mixed_mode.csv"));
  ASSERT_EQ(put_crack(id, mixed_mode_crack())->status, 200);
  auto r = client_->Post("/api/fields/" + id + "/jobs", Json{{"material", kMaterial}}.dump(), "application/json");
  ASSERT_EQ(r->status, 202) << r->body;
  const std::string job = json_of(r)["id"];
  const Json done = wait_job(job);
  ASSERT_EQ(done["status"], "done") << done.dump();

  const auto field = load_field(kData + "/mixed_mode.csv", LengthUnit::m);
  const auto expected = run_analysis(field, crack_from_json(mixed_mode_crack()), material_from_json(kMaterial));
  EXPECT_EQ(done["result"].dump(), result_json(expected).dump());
  // repeated reads return the same document
  EXPECT_EQ(client_->Get("/api/jobs/" + job)->body, client_->Get("/api/jobs/" + job)->body);
}

TEST_F(ServiceTest, QSweepJobCarriesSuggestion) {
  const auto id = upload(slurp(kData + "/mixed_mode.csv"));
  ASSERT_EQ(put_crack(id, mixed_mode_crack())->status, 200);
  const Json body{{"kind", "qsweep"}, {"material", kMaterial}, {"angles_deg", {-20, -10, 0, 10, 20}}};
  auto r = client_->Post("/api/fields/" + id + "/jobs", body.dump(), "application/json");
  ASSERT_EQ(r->status, 202) << r->body;
  const Json done = wait_job(json_of(r)["id"]);
  ASSERT_EQ(done["status"], "done") << done.dump();
  EXPECT_EQ(done["study"]["points"].size(), 5u);
  EXPECT_FALSE(done["suggestion"].is_null());
}

TEST_F(ServiceTest, FailedJobReportsError) {
  const auto id = upload(slurp(kData + "/mixed_mode.csv"));
  ASSERT_EQ(put_crack(id, mixed_mode_crack())->status, 200);
  const Json body{{"kind", "qsweep"}, {"material", kMaterial}, {"angles_deg", {10, 0}}};
  auto r = client_->Post("/api/fields/" + id + "/jobs", body.dump(), "application/json");
  ASSERT_EQ(r->status, 202);
  const std::string job = json_of(r)["id"];
  const Json failed = wait_job(job);
  EXPECT_EQ(failed["status"], "failed");
  EXPECT_EQ(failed["error"]["kind"], "InvalidStudy");
  EXPECT_EQ(client_->Get("/api/jobs/" + job)->status, 500);
}

TEST_F(ServiceTest, FullQueueRejects) {
  ServiceOptions o;
  o.queue_capacity = 0;
  start(o);
  const auto id = upload(slurp(kData + "/mixed_mode.csv"));
  ASSERT_EQ(put_crack(id, mixed_mode_crack())->status, 200);
  auto r = client_->Post("/api/fields/" + id + "/jobs", Json{{"material", kMaterial}}.dump(), "application/json");
  EXPECT_EQ(r->status, 503);
  EXPECT_EQ(json_of(r)["error"]["kind"], "QueueFull");
}

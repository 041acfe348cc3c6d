#include "bdsoc/io.hpp"
#include "bdsoc/pipeline.hpp"
#include "bdsoc/registry.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace bdsoc;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("bdsoc_unit_" + name);
    fs::remove_all(p);
    return p;
}

json seeded() {
    json doc = default_config_json();
    doc["seeds"]["master"] = 7;
    doc["seeds"]["b"] = 11;
    return doc;
}

std::string error_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST_SUITE("pipeline") {

TEST_CASE("seeds are mandatory") {
    const std::string msg = error_of([] { config_from_json(default_config_json()); });
    CHECK(msg.find("seeds.master") != std::string::npos);
    json doc = default_config_json();
    doc["seeds"]["master"] = 1;
    CHECK(error_of([&] { config_from_json(doc); }).find("seeds.b") != std::string::npos);
    doc["seeds"]["b"] = -3;
    CHECK_THROWS_AS(config_from_json(doc), Error);
    const auto cfg = config_from_json(seeded());
    CHECK(*cfg.master_seed == 7);
    CHECK(*cfg.b_seed == 11);
}

TEST_CASE("unknown keys list the valid ones") {
    json doc = seeded();
    doc["tolerances"]["epsilom"] = 0.1;
    const std::string msg = error_of([&] { config_from_json(doc); });
    CHECK(msg.find("epsilom") != std::string::npos);
    CHECK(msg.find("epsilon") != std::string::npos);
    CHECK(msg.find("agreement") != std::string::npos);

    json top = seeded();
    top["colour"] = "red";
    CHECK(error_of([&] { config_from_json(top); }).find("pipeline") != std::string::npos);

    json wrong = seeded();
    wrong["time"]["steps"] = "many";
    CHECK(error_of([&] { config_from_json(wrong); }).find("time.steps") != std::string::npos);
}

TEST_CASE("unknown names are rejected with the valid choices") {
    json doc = seeded();
    doc["pipeline"] = "verify-some";
    CHECK(error_of([&] { config_from_json(doc); }).find("verify-weak") != std::string::npos);
    json model = seeded();
    model["model"]["name"] = "heston";
    const std::string msg = error_of([&] { run(config_from_json(model)); });
    for (const auto& n : registry_names()) CHECK(msg.find(n) != std::string::npos);
}

TEST_CASE("dotted overrides") {
    json doc = seeded();
    apply_override(doc, "time.steps=20");
    apply_override(doc, "model.name=martingale");
    apply_override(doc, "model.parameters.sigma=0.5");
    apply_override(doc, "penalty.levels=[1,2,4]");
    const auto cfg = config_from_json(doc);
    CHECK(cfg.steps == 20);
    CHECK(cfg.model == "martingale");
    CHECK(cfg.parameters.at("sigma") == 0.5);
    CHECK(cfg.penalty_levels.size() == 3);
    CHECK(error_of([&] { apply_override(doc, "time.stepz=3"); }).find("steps") != std::string::npos);
    CHECK_THROWS_AS(apply_override(doc, "nonsense"), Error);
}

TEST_CASE("config files") {
    const fs::path dir = scratch("config");
    fs::create_directories(dir);
    const std::string path = (dir / "c.json").string();
    write_text(path, "// comments are fine\n{\"seeds\": {\"master\": 3, \"b\": 4}, \"paths\": 50}\n");
    const auto cfg = config_from_json(load_config_json(path));
    CHECK(cfg.paths == 50);
    CHECK(cfg.steps == 50);
    CHECK_THROWS_AS(load_config_json((dir / "missing.json").string()), Error);
    write_text(path, "{\"paths\": ");
    CHECK_THROWS_AS(load_config_json(path), Error);
}

TEST_CASE("csv text") {
    CHECK(std::stod(format_scalar(0.1)) == 0.1);
    CHECK(std::stod(format_scalar(1.0 / 3.0)) == 1.0 / 3.0);
    CHECK_THROWS_AS(write_text("/proc/definitely/not/here.csv", "x"), Error);
}

TEST_CASE("simulate run, report and byte reproducibility") {
    json doc = seeded();
    apply_override(doc, "pipeline=simulate");
    apply_override(doc, "model.name=martingale");
    apply_override(doc, "paths=200");
    apply_override(doc, "time.steps=20");
    const fs::path a = scratch("sim_a"), b = scratch("sim_b");
    doc["output"] = a.string();
    const auto ra = run(config_from_json(doc));
    doc["output"] = b.string();
    doc["workers"] = 3;
    run(config_from_json(doc));
    CHECK(ra.pass);
    for (const auto& c : ra.checks) CHECK(c.criterion == "C4");
    for (const char* f : {"ensemble.csv", "checks.csv", "summary.json"})
        CHECK(read_text((a / f).string()) == read_text((b / f).string()));
    const std::string csv = read_text((a / "ensemble.csv").string());
    CHECK(csv.rfind("# model=martingale", 0) == 0);
    CHECK(csv.find("seed") != std::string::npos);

    const std::string table = report(a.string());
    CHECK(table.find("C4") != std::string::npos);
    CHECK(table.find("C6") == std::string::npos);
}

TEST_CASE("report needs a run directory") {
    const fs::path empty = scratch("empty");
    fs::create_directories(empty);
    const std::string msg = error_of([&] { report(empty.string()); });
    CHECK(msg.find("summary.json") != std::string::npos);
    CHECK(msg.find("checks.csv") != std::string::npos);
}

TEST_CASE("unwritable output is an error") {
    const fs::path dir = scratch("blocked");
    fs::create_directories(dir);
    write_text((dir / "file").string(), "x");
    json doc = seeded();
    doc["pipeline"] = "simulate";
    doc["paths"] = 10;
    doc["output"] = (dir / "file" / "out").string();
    CHECK_THROWS_AS(run(config_from_json(doc)), Error);
}

}

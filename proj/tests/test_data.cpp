#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "nego/data.hpp"
#include "nego/errors.hpp"
#include "nego/ioutil.hpp"
#include "nego/rng.hpp"

using namespace nego;

namespace {

std::filesystem::path tmp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

void write(const std::filesystem::path& p, const std::string& content) {
    std::ofstream f(p, std::ios::trunc);
    f << content;
}

} // namespace

TEST_CASE("load_csv parses a well-formed file") {
    const auto path = tmp_file("nego_data_ok.csv");
    std::string body = "x_0,x_1,x_2,price,label\n";
    for (int i = 0; i < 10; ++i)
        body += std::to_string(0.1 * i) + ",0.5,1.0,0." + std::to_string(i) + "," +
                std::to_string(i % 2) + "\n";
    write(path, body);

    const Dataset data = load_csv(path.string());
    CHECK(data.size() == 10);
    CHECK(data.dim() == 3);
    CHECK(data.rows[3].price == doctest::Approx(0.3));
    CHECK(data.rows[3].label == 1);
    std::filesystem::remove(path);
}

TEST_CASE("load_csv names offending rows") {
    const auto path = tmp_file("nego_data_bad.csv");
    write(path, "x_0,price,label\n0.5,0.5,1\n0.5,1.2,0\n0.5,abc,1\n");
    try {
        load_csv(path.string());
        FAIL("expected ingestion_error");
    } catch (const ingestion_error& e) {
        const std::string msg = e.what();
        CHECK(msg.find("row 3") != std::string::npos); // price 1.2
        CHECK(msg.find("row 4") != std::string::npos); // non-numeric
    }
    std::filesystem::remove(path);
}

TEST_CASE("load_csv accepts an empty body with a warning") {
    const auto path = tmp_file("nego_data_empty.csv");
    write(path, "x_0,x_1,price,label\n");
    std::vector<std::string> warnings;
    const Dataset data = load_csv(path.string(), &warnings);
    CHECK(data.size() == 0);
    CHECK(data.dim() == 2);
    CHECK(warnings.size() == 1);
    std::filesystem::remove(path);
}

TEST_CASE("load_csv requires the schema header") {
    const auto path = tmp_file("nego_data_header.csv");
    write(path, "a,b,c\n1,2,3\n");
    CHECK_THROWS_AS(load_csv(path.string()), ingestion_error);
    std::filesystem::remove(path);
}

TEST_CASE("csv round trip preserves rows and sidecar metadata") {
    Dataset data;
    data.feature_names = {"x_0", "x_1"};
    data.window = {30.0, 420.0};
    data.provenance = "simulated";
    Rng rng(8);
    for (int i = 0; i < 25; ++i)
        data.rows.push_back({{rng.uniform(), rng.uniform(-2.0, 2.0)}, rng.uniform(),
                             rng.bernoulli(0.4) ? 1 : 0});

    const auto path = tmp_file("nego_data_rt.csv");
    save_csv(data, path.string());
    const Dataset back = load_csv(path.string());
    REQUIRE(back.size() == data.size());
    CHECK(back.window.min == data.window.min);
    CHECK(back.window.max == data.window.max);
    CHECK(back.provenance == "simulated");
    for (std::size_t i = 0; i < data.size(); ++i) {
        CHECK(back.rows[i].label == data.rows[i].label);
        CHECK(back.rows[i].price == doctest::Approx(data.rows[i].price).epsilon(1e-8));
        for (std::size_t c = 0; c < data.dim(); ++c)
            CHECK(back.rows[i].x[c] == doctest::Approx(data.rows[i].x[c]).epsilon(1e-8));
    }
    std::filesystem::remove(path);
    std::filesystem::remove(path.string() + ".meta.json");
}

TEST_CASE("price normalization endpoints and round trip") {
    const PriceWindow w{50.0, 150.0};
    CHECK(normalize_price(50.0, w) == 0.0);
    CHECK(normalize_price(150.0, w) == 1.0);
    CHECK(normalize_price(100.0, w) == doctest::Approx(0.5));
    CHECK_THROWS_AS(normalize_price(1.0, PriceWindow{2.0, 2.0}), config_error);

    Rng rng(12);
    for (int i = 0; i < 1000; ++i) {
        const double raw = rng.uniform(50.0, 150.0);
        const double back = denormalize_price(normalize_price(raw, w), w);
        CHECK(std::abs(back - raw) < 1e-12);
    }
}

TEST_CASE("split produces the documented partition sizes") {
    Dataset data;
    data.feature_names = {"x_0"};
    for (int i = 0; i < 100; ++i) data.rows.push_back({{static_cast<double>(i)}, 0.5, 0});

    const SplitResult parts = split(data, 0.2, 0.2, 42);
    CHECK(parts.train.size() == 64);
    CHECK(parts.val.size() == 16);
    CHECK(parts.test.size() == 20);

    // disjoint and exhaustive
    std::set<int> seen;
    for (const auto* d : {&parts.train, &parts.val, &parts.test})
        for (const auto& r : d->rows) seen.insert(static_cast<int>(r.x[0]));
    CHECK(seen.size() == 100);

    // deterministic per seed
    const SplitResult again = split(data, 0.2, 0.2, 42);
    for (std::size_t i = 0; i < parts.train.size(); ++i)
        CHECK(again.train.rows[i].x[0] == parts.train.rows[i].x[0]);
    const SplitResult other = split(data, 0.2, 0.2, 43);
    bool any_diff = false;
    for (std::size_t i = 0; i < parts.train.size(); ++i)
        any_diff = any_diff || other.train.rows[i].x[0] != parts.train.rows[i].x[0];
    CHECK(any_diff);
}

TEST_CASE("split rejects bad fractions and tiny datasets") {
    Dataset data;
    data.feature_names = {"x_0"};
    for (int i = 0; i < 10; ++i) data.rows.push_back({{1.0}, 0.5, 0});
    CHECK_THROWS_AS(split(data, 0.0, 0.2, 1), config_error);
    CHECK_THROWS_AS(split(data, 0.2, 1.0, 1), config_error);
    Dataset tiny;
    tiny.feature_names = {"x_0"};
    tiny.rows.push_back({{1.0}, 0.5, 0});
    CHECK_THROWS_AS(split(tiny, 0.2, 0.2, 1), config_error);
}

TEST_CASE("dataset validation is total") {
    Dataset data;
    data.feature_names = {"x_0"};
    data.rows.push_back({{0.5}, 1.5, 0}); // price out of range
    CHECK_THROWS_AS(data.validate(), ingestion_error);
    data.rows[0].price = 0.5;
    data.rows[0].label = 2;
    CHECK_THROWS_AS(data.validate(), ingestion_error);
    data.rows[0].label = 1;
    CHECK_NOTHROW(data.validate());
}

TEST_CASE("atomic writer refuses unwritable targets and leaves nothing behind") {
    const std::string target = "/proc/nego_not_writable/file.txt";
    CHECK_THROWS_AS(write_file_atomic(target, "content"), io_error);
    CHECK_FALSE(std::filesystem::exists(target));
}

#include "cavsync/csv.hpp"

#include <doctest.h>

#include <filesystem>
#include <sstream>

using namespace cavsync;

TEST_CASE("timeseries round trip is exact") {
    TimeSeries s;
    s.times = {0.0, 1e-9, 2.000000001e-9};
    s.add_channel("n_photons");
    s.add_channel("sz_0");
    s.channel_mut(0) = {0.1, 1.0 / 3.0, 12345.6789e10};
    s.channel_mut(1) = {-1.0, -0.999999999999, 5e-300};
    std::stringstream ss;
    write_timeseries_csv(ss, s);
    const auto back = timeseries_from_csv(read_csv(ss));
    CHECK(back.times == s.times);
    CHECK(back.names() == s.names());
    for (std::size_t i = 0; i < 2; ++i) {
        const auto a = s.channel(i), b = back.channel(i);
        CHECK(std::equal(a.begin(), a.end(), b.begin(), b.end()));
    }
}

TEST_CASE("csv reader errors") {
    std::stringstream bad("a,b\n1,2\n3\n");
    CHECK_THROWS(read_csv(bad));
    std::stringstream ok("a,b\n1,nan\n");
    const auto t = read_csv(ok);
    CHECK(std::isnan(t.values("b")[0]));
    CHECK_THROWS((void)t.column("c"));
}

TEST_CASE("atomic file only appears on commit") {
    const auto dir = std::filesystem::temp_directory_path() / "cavsync_csv_test";
    std::filesystem::create_directories(dir);
    const auto p = dir / "x.csv";
    std::filesystem::remove(p);
    {
        AtomicFile f(p);
        f.stream() << "a\n1\n";
        CHECK_FALSE(std::filesystem::exists(p));
        f.commit();
    }
    CHECK(std::filesystem::exists(p));
    std::filesystem::remove_all(dir);
}

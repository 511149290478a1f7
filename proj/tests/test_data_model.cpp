#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "dsl/csv.hpp"
#include "dsl/data_model.hpp"
#include "dsl/rng.hpp"

using namespace dsl;

namespace {

SubjectRecord rec(double u, int delta, std::vector<double> x, int w) {
  SubjectRecord r;
  r.u = u;
  r.delta = delta;
  r.x = Eigen::Map<VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  r.w = w;
  return r;
}

}  // namespace

TEST_CASE("validate_dataset accepts well-formed input") {
  std::vector<SubjectRecord> rows{rec(1.0, 1, {0.5, -1.0}, 1),
                                  rec(2.5, 0, {1.0, 2.0}, 0),
                                  rec(0.0, 1, {-2.0, 0.0}, 1)};
  Dataset ds = validate_dataset(rows, 2);
  CHECK(ds.n() == 3);
  CHECK(ds.dim() == 2);
  CHECK(ds.u()[1] == 2.5);
  CHECK(ds.record(2).w == 1);
}

TEST_CASE("validate_dataset rejects invariant violations with the index") {
  std::vector<SubjectRecord> rows{rec(1.0, 1, {0.0}, 1), rec(-1.0, 0, {0.0}, 0)};
  CHECK_THROWS_WITH_AS(validate_dataset(rows, 1),
                       doctest::Contains("negative follow-up at index 1"),
                       invalid_input);

  rows[1] = rec(1.0, 0, {0.0}, 2);
  CHECK_THROWS_WITH_AS(validate_dataset(rows, 1),
                       doctest::Contains("treatment not binary"), invalid_input);

  rows[1] = rec(1.0, 2, {0.0}, 0);
  CHECK_THROWS_AS(validate_dataset(rows, 1), invalid_input);

  rows[1] = rec(1.0, 0, {0.0, 1.0}, 0);
  CHECK_THROWS_WITH_AS(validate_dataset(rows, 1),
                       doctest::Contains("dimension mismatch"), invalid_input);

  CHECK_THROWS_AS(validate_dataset({}, 1), invalid_input);
}

namespace {

Dataset toy_dataset(std::vector<double> u) {
  std::vector<SubjectRecord> rows;
  for (double v : u) rows.push_back(rec(v, 1, {0.0}, rows.size() % 2));
  return validate_dataset(rows, 1);
}

}  // namespace

TEST_CASE("build_time_grid: j=1 is the observed median") {
  Dataset ds = toy_dataset({5.0, 1.0, 3.0, 2.0, 4.0});
  TimeGrid g = build_time_grid(ds, 1);
  CHECK(g.j() == 1);
  CHECK(g.times()[0] == doctest::Approx(3.0));

  // even count: type-7 interpolation between the middle order statistics
  Dataset even = toy_dataset({1.0, 2.0, 3.0, 10.0});
  CHECK(build_time_grid(even, 1).times()[0] == doctest::Approx(2.5));
}

TEST_CASE("build_time_grid: j=2 returns the quantile endpoints") {
  std::vector<double> u;
  for (int i = 1; i <= 101; ++i) u.push_back(static_cast<double>(i));
  Dataset ds = toy_dataset(u);
  TimeGrid g = build_time_grid(ds, 2, 0.2, 0.8);
  CHECK(g.times()[0] == doctest::Approx(21.0));  // q20 of 1..101
  CHECK(g.times()[1] == doctest::Approx(81.0));  // q80 of 1..101
}

TEST_CASE("build_time_grid: j=50 spacing is uniform to 1e-12 relative") {
  Rng rng(7);
  std::vector<double> u;
  for (int i = 0; i < 400; ++i) u.push_back(rng.exponential(0.3));
  Dataset ds = toy_dataset(u);
  TimeGrid g = build_time_grid(ds, 50, 0.2, 0.8);
  REQUIRE(g.j() == 50);
  const double step = g.times()[1] - g.times()[0];
  for (Eigen::Index i = 2; i < g.j(); ++i) {
    CHECK(g.times()[i] - g.times()[i - 1] ==
          doctest::Approx(step).epsilon(1e-12));
  }
}

TEST_CASE("build_time_grid: degenerate and invalid inputs") {
  Dataset constant = toy_dataset({2.0, 2.0, 2.0});
  CHECK_THROWS_AS(build_time_grid(constant, 5), invalid_input);
  Dataset ds = toy_dataset({1.0, 2.0, 3.0});
  CHECK_THROWS_AS(build_time_grid(ds, 0), invalid_input);
  CHECK_THROWS_AS(build_time_grid(ds, 5, 0.8, 0.2), invalid_input);
}

TEST_CASE("TimeGrid rejects non-increasing or non-positive times") {
  VectorXd bad(3);
  bad << 1.0, 1.0, 2.0;
  CHECK_THROWS_AS(TimeGrid{bad}, invalid_input);
  bad << 0.0, 1.0, 2.0;
  CHECK_THROWS_AS(TimeGrid{bad}, invalid_input);
}

TEST_CASE("assign_folds: exact division and remainder distribution") {
  FoldAssignment fa = assign_folds(10, 5, 99);
  for (int f = 0; f < 5; ++f) CHECK(fa.members(f).size() == 2);

  FoldAssignment fb = assign_folds(11, 5, 99);
  std::multiset<std::size_t> sizes;
  for (int f = 0; f < 5; ++f) sizes.insert(fb.members(f).size());
  CHECK(sizes == std::multiset<std::size_t>{2, 2, 2, 2, 3});
}

TEST_CASE("assign_folds: deterministic and rejects bad k") {
  FoldAssignment a = assign_folds(37, 4, 5);
  FoldAssignment b = assign_folds(37, 4, 5);
  CHECK(a.fold_of == b.fold_of);
  CHECK_THROWS_AS(assign_folds(3, 4, 0), invalid_input);
  CHECK_THROWS_AS(assign_folds(10, 1, 0), invalid_input);
}

TEST_CASE("assign_folds properties: partition with near-equal sizes") {
  Rng rng(123);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng.below(200));
    const int k = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n - 1)));
    FoldAssignment fa = assign_folds(n, k, rng.next_u64());
    std::size_t total = 0, smallest = SIZE_MAX, largest = 0;
    for (int f = 0; f < k; ++f) {
      const auto m = fa.members(f).size();
      total += m;
      smallest = std::min(smallest, m);
      largest = std::max(largest, m);
    }
    CHECK(total == static_cast<std::size_t>(n));  // every record in one fold
    CHECK(largest - smallest <= 1);
    for (int v : fa.fold_of) CHECK((v >= 0 && v < k));
  }
}

TEST_CASE("kaplan_meier: no events gives the constant function 1") {
  std::vector<SubjectRecord> rows{rec(1.0, 0, {0.0}, 0), rec(2.0, 0, {0.0}, 1),
                                  rec(3.0, 0, {0.0}, 0)};
  StepFunction km = kaplan_meier(validate_dataset(rows, 1));
  CHECK(km(0.0) == 1.0);
  CHECK(km(2.5) == 1.0);
  CHECK(km(100.0) == 1.0);
}

TEST_CASE("kaplan_meier: single event record") {
  std::vector<SubjectRecord> rows{rec(3.0, 1, {0.0}, 0)};
  StepFunction km = kaplan_meier(validate_dataset(rows, 1));
  CHECK(km(2.999) == 1.0);
  CHECK(km(3.0) == 0.0);
  CHECK(km(10.0) == 0.0);
}

TEST_CASE("kaplan_meier: five-record fixture against the hand-computed product") {
  // (u, delta): (1,1) (2,0) (3,1) (3,0) (5,1)
  // risk sets: t=1 -> 5 at risk, 1 event: S = 4/5
  //            t=3 -> 3 at risk, 1 event: S = 4/5 * 2/3 = 8/15
  //            t=5 -> 1 at risk, 1 event: S = 0
  std::vector<SubjectRecord> rows{rec(1.0, 1, {0.0}, 0), rec(2.0, 0, {0.0}, 0),
                                  rec(3.0, 1, {0.0}, 1), rec(3.0, 0, {0.0}, 1),
                                  rec(5.0, 1, {0.0}, 0)};
  StepFunction km = kaplan_meier(validate_dataset(rows, 1));
  CHECK(km(0.5) == doctest::Approx(1.0));
  CHECK(km(1.0) == doctest::Approx(0.8));
  CHECK(km(2.9) == doctest::Approx(0.8));
  CHECK(km(3.0) == doctest::Approx(8.0 / 15.0));
  CHECK(km(4.9) == doctest::Approx(8.0 / 15.0));
  CHECK(km(5.0) == doctest::Approx(0.0));
}

TEST_CASE("kaplan_meier: arm restriction and empty-arm error") {
  std::vector<SubjectRecord> rows{rec(1.0, 1, {0.0}, 1), rec(2.0, 1, {0.0}, 1)};
  Dataset ds = validate_dataset(rows, 1);
  CHECK(kaplan_meier(ds, 1)(1.5) == doctest::Approx(0.5));
  CHECK_THROWS_AS(kaplan_meier(ds, 0), invalid_input);
}

TEST_CASE("kaplan_meier property: nonincreasing within [0,1] on random data") {
  Rng rng(2024);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<SubjectRecord> rows;
    const int n = 1 + static_cast<int>(rng.below(40));
    for (int i = 0; i < n; ++i) {
      const double u = rng.exponential(0.5);
      rows.push_back(rec(u, rng.bernoulli(0.6) ? 1 : 0, {0.0}, 0));
    }
    StepFunction km = kaplan_meier(validate_dataset(rows, 1));
    double prev = 1.0;
    for (double t = 0.0; t < 10.0; t += 0.05) {
      const double s = km(t);
      CHECK(s <= prev + 1e-15);
      CHECK(s >= 0.0);
      CHECK(s <= 1.0);
      prev = s;
    }
  }
}

TEST_CASE("dataset CSV round trip preserves every value") {
  Rng rng(5);
  std::vector<SubjectRecord> rows;
  for (int i = 0; i < 20; ++i) {
    rows.push_back(rec(rng.exponential(1.0), rng.bernoulli(0.5),
                       {rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)},
                       rng.bernoulli(0.4)));
  }
  Dataset ds = validate_dataset(rows, 3);
  const std::string path = "test_roundtrip.csv";
  write_dataset_csv(ds, path);
  Dataset back = read_dataset(path, false);
  CHECK(back.n() == ds.n());
  CHECK(back.dim() == ds.dim());
  CHECK((back.x() - ds.x()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.u() - ds.u()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.delta() == ds.delta());
  CHECK(back.w() == ds.w());
  std::filesystem::remove(path);
}

TEST_CASE("CSV: missing covariate cells are imputed with the column mean") {
  const std::string path = "test_missing.csv";
  {
    std::ofstream out(path);
    out << "time,event,treatment,x1,x2\n";
    out << "1.0,1,0,2.0,5.0\n";
    out << "2.0,0,1,,7.0\n";
    out << "3.0,1,1,4.0,\n";
  }
  CHECK_THROWS_AS(read_dataset(path, false), invalid_input);
  Dataset ds = read_dataset(path, true);
  CHECK(ds.x()(1, 0) == doctest::Approx(3.0));  // mean of 2 and 4
  CHECK(ds.x()(2, 1) == doctest::Approx(6.0));  // mean of 5 and 7
  std::filesystem::remove(path);
}

TEST_CASE("CSV: malformed inputs are rejected with line context") {
  const std::string path = "test_bad.csv";
  {
    std::ofstream out(path);
    out << "time,event,group,x1\n";
  }
  CHECK_THROWS_AS(read_dataset_csv(path), invalid_input);
  {
    std::ofstream out(path);
    out << "time,event,treatment,x1\n1.0,3,0,1.0\n";
  }
  CHECK_THROWS_WITH_AS(read_dataset_csv(path), doctest::Contains("line 2"),
                       invalid_input);
  std::filesystem::remove(path);
}

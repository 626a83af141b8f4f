#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "vbnet/data.hpp"
#include "vbnet/math.hpp"

using namespace vbnet;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / ("vbnet_data_test_" + std::to_string(::getpid()))) {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

// test-local symmetric eigensolver, independent of the library's
void oracle_eigen_sym(std::vector<std::vector<double>> a, std::vector<double>& vals) {
    const std::size_t n = a.size();
    for (int sweep = 0; sweep < 200; ++sweep) {
        double off = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
        if (off < 1e-24) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a[p][q]) < 1e-300) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    vals.resize(n);
    for (std::size_t i = 0; i < n; ++i) vals[i] = a[i][i];
    std::sort(vals.begin(), vals.end(), std::greater<double>());
}

} // namespace

TEST_CASE("curve formula at pinned points") {
    CHECK(curve_value(0.0, 0.0) == Catch::Approx(0.0).margin(1e-15));
    // 0.25 + 2 sin(pi/2) + 2 sin(pi) = 2.25
    CHECK(curve_value(0.25, 0.0) == Catch::Approx(2.25).margin(1e-12));
}

TEST_CASE("gen_curve reproducibility and support") {
    RngState a(5), b(5);
    const Dataset da = gen_curve(100, -0.1, 0.6, 0.14, a);
    const Dataset db = gen_curve(100, -0.1, 0.6, 0.14, b);
    CHECK(da.x.data() == db.x.data());
    CHECK(da.y.data() == db.y.data());
    for (std::size_t i = 0; i < da.n(); ++i) {
        CHECK(da.x(i, 0) >= -0.1);
        CHECK(da.x(i, 0) < 0.6);
    }
    RngState c(5);
    CHECK_THROWS_AS(gen_curve(10, 0.5, 0.5, 0.1, c), ConfigError);
}

TEST_CASE("delimited round trip is exact") {
    TempDir tmp;
    const std::string path = (tmp.path / "toy.csv").string();
    RngState rng(8);
    Dataset ds;
    ds.x = Matrix(3, 2);
    ds.y = Matrix(3, 1);
    for (double& v : ds.x.data()) v = rng.normal() * 1e-7;
    for (double& v : ds.y.data()) v = rng.normal() * 1e3;
    ds.feature_names = {"a", "b"};
    save_delimited(ds, path);
    const Dataset back = load_delimited(path, "y");
    REQUIRE(back.n() == 3);
    REQUIRE(back.p() == 2);
    CHECK(back.x.data() == ds.x.data());
    CHECK(back.y.data() == ds.y.data());
    CHECK(back.feature_names == ds.feature_names);
}

TEST_CASE("non-numeric cell reports its row and column") {
    TempDir tmp;
    const std::string path = (tmp.path / "bad.csv").string();
    {
        std::ofstream out(path);
        out << "c1,c2,c3,c4,y\n";
        out << "1,2,3,4,5\n";
        out << "1,2,3,4,oops\n";
    }
    try {
        load_delimited(path, "y");
        FAIL("expected DataError");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("row 2") != std::string::npos);
        CHECK(msg.find("column 5") != std::string::npos);
    }
}

TEST_CASE("missing file and missing target column are distinct errors") {
    CHECK_THROWS_AS(load_delimited("/nonexistent/nowhere.csv", "y"), DataError);
    TempDir tmp;
    const std::string path = (tmp.path / "nt.csv").string();
    {
        std::ofstream out(path);
        out << "a,b\n1,2\n";
    }
    try {
        load_delimited(path, "y");
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("target column") != std::string::npos);
    }
}

TEST_CASE("riboflavin file dimensions when available") {
    const char* env = std::getenv("VBNET_RIBOFLAVIN_CSV");
    const std::string path = env != nullptr ? env : "data/riboflavin.csv";
    if (!fs::exists(path)) {
        SUCCEED("riboflavin file not present; skipping");
        return;
    }
    const Dataset ds = load_delimited(path, "y");
    CHECK(ds.n() == 71);
    CHECK(ds.p() == 4088);
}

TEST_CASE("split partitions the rows deterministically") {
    RngState gen(3);
    Dataset ds;
    ds.x = Matrix(71, 2);
    ds.y = Matrix(71, 1);
    for (std::size_t i = 0; i < 71; ++i) {
        ds.x(i, 0) = static_cast<double>(i);
        ds.x(i, 1) = gen.normal();
        ds.y(i, 0) = static_cast<double>(i) * 10.0;
    }
    RngState rng(17);
    const auto [train, test] = split(ds, 56, rng);
    CHECK(train.n() == 56);
    CHECK(test.n() == 15);

    std::vector<int> seen(71, 0);
    for (std::size_t i = 0; i < train.n(); ++i) seen[static_cast<std::size_t>(train.x(i, 0))]++;
    for (std::size_t i = 0; i < test.n(); ++i) seen[static_cast<std::size_t>(test.x(i, 0))]++;
    for (int s : seen) CHECK(s == 1); // union = all rows, no duplicates

    // y rows stay aligned with x rows
    for (std::size_t i = 0; i < train.n(); ++i) {
        CHECK(train.y(i, 0) == Catch::Approx(train.x(i, 0) * 10.0));
    }

    RngState rng2(17);
    const auto [train2, test2] = split(ds, 56, rng2);
    CHECK(train2.x.data() == train.x.data());
    CHECK(test2.x.data() == test.x.data());

    RngState rng3(18);
    CHECK_THROWS_AS(split(ds, 0, rng3), ConfigError);
    CHECK_THROWS_AS(split(ds, 71, rng3), ConfigError);
}

TEST_CASE("standardization invariants on the fitting split") {
    RngState rng(12);
    Matrix m(40, 3);
    for (std::size_t i = 0; i < m.rows(); ++i) {
        m(i, 0) = 5.0 + 2.0 * rng.normal();
        m(i, 1) = -3.0 + 0.1 * rng.normal();
        m(i, 2) = 100.0 * rng.normal();
    }
    const ColumnStats stats = fit_column_stats(m);
    const Matrix std_m = apply_standardize(m, stats);
    for (std::size_t j = 0; j < 3; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < 40; ++i) mean += std_m(i, j);
        mean /= 40.0;
        CHECK(std::abs(mean) < 1e-10);
        std::vector<double> col(40);
        for (std::size_t i = 0; i < 40; ++i) col[i] = std_m(i, j);
        CHECK(std::sqrt(variance_of(col)) == Catch::Approx(1.0).margin(1e-10));
    }
    const Matrix back = invert_standardize(std_m, stats);
    for (std::size_t i = 0; i < m.size(); ++i) {
        CHECK(back.data()[i] == Catch::Approx(m.data()[i]).margin(1e-10));
    }
}

TEST_CASE("standardization fitted on train does not peek at test") {
    RngState rng(14);
    Matrix train(30, 1), test(30, 1);
    for (std::size_t i = 0; i < 30; ++i) {
        train(i, 0) = rng.normal();
        test(i, 0) = 4.0 + rng.normal(); // shifted distribution
    }
    const ColumnStats stats = fit_column_stats(train);
    const Matrix test_std = apply_standardize(test, stats);
    double mean = 0.0;
    for (std::size_t i = 0; i < 30; ++i) mean += test_std(i, 0);
    mean /= 30.0;
    CHECK(std::abs(mean) > 1.0); // the shift survives the transform
}

TEST_CASE("pca on collinear points finds the diagonal direction") {
    Matrix x(10, 2);
    for (std::size_t i = 0; i < 10; ++i) {
        const double t = static_cast<double>(i) - 4.5;
        x(i, 0) = t;
        x(i, 1) = t;
    }
    const PcaModel model = fit_pca(x, 2);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(model.component_matrix(0, 0)) == Catch::Approx(inv_sqrt2).margin(1e-10));
    CHECK(std::abs(model.component_matrix(1, 0)) == Catch::Approx(inv_sqrt2).margin(1e-10));
    CHECK(model.component_matrix(0, 0) == Catch::Approx(model.component_matrix(1, 0)).margin(1e-10));
    CHECK(model.explained_variance[1] == Catch::Approx(0.0).margin(1e-10));
}

TEST_CASE("full-rank projection reconstructs the centered data") {
    RngState rng(30);
    Matrix x(10, 4);
    for (double& v : x.data()) v = rng.normal();
    const PcaModel model = fit_pca(x, 4);
    const Matrix scores = pca_transform(model, x);
    const Matrix recon = matmul_nt(scores, model.component_matrix); // scores * C^T
    for (std::size_t i = 0; i < x.rows(); ++i) {
        for (std::size_t j = 0; j < x.cols(); ++j) {
            const double centered = x(i, j) - model.column_means[j];
            CHECK(recon(i, j) == Catch::Approx(centered).margin(1e-8));
        }
    }
}

TEST_CASE("gram-route pca matches a dense covariance eigendecomposition oracle") {
    RngState rng(31);
    Matrix x(10, 50);
    for (double& v : x.data()) v = rng.normal();
    const std::size_t k = 9; // min(n-1, p)
    const PcaModel model = fit_pca(x, k);

    // oracle: brute-force 50x50 covariance eigenvalues
    std::vector<double> means(50, 0.0);
    for (std::size_t i = 0; i < 10; ++i)
        for (std::size_t j = 0; j < 50; ++j) means[j] += x(i, j);
    for (double& m : means) m /= 10.0;
    std::vector<std::vector<double>> cov(50, std::vector<double>(50, 0.0));
    for (std::size_t a = 0; a < 50; ++a) {
        for (std::size_t b = 0; b < 50; ++b) {
            double s = 0.0;
            for (std::size_t i = 0; i < 10; ++i) {
                s += (x(i, a) - means[a]) * (x(i, b) - means[b]);
            }
            cov[a][b] = s / 9.0;
        }
    }
    std::vector<double> oracle_vals;
    oracle_eigen_sym(cov, oracle_vals);
    for (std::size_t c = 0; c < k; ++c) {
        CHECK(model.explained_variance[c] == Catch::Approx(oracle_vals[c]).margin(1e-8));
    }

    // orthonormal components
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = 0; b < k; ++b) {
            double dot = 0.0;
            for (std::size_t j = 0; j < 50; ++j) {
                dot += model.component_matrix(j, a) * model.component_matrix(j, b);
            }
            CHECK(dot == Catch::Approx(a == b ? 1.0 : 0.0).margin(1e-8));
        }
    }
}

TEST_CASE("transformed training data has the stated per-component variance") {
    RngState rng(32);
    Matrix x(25, 6);
    for (double& v : x.data()) v = rng.normal();
    const PcaModel model = fit_pca(x, 4);
    const Matrix scores = pca_transform(model, x);
    for (std::size_t c = 0; c < 4; ++c) {
        std::vector<double> col(scores.rows());
        for (std::size_t i = 0; i < scores.rows(); ++i) col[i] = scores(i, c);
        CHECK(variance_of(col) == Catch::Approx(model.explained_variance[c]).margin(1e-8));
    }
    // nonincreasing spectrum
    for (std::size_t c = 1; c < 4; ++c) {
        CHECK(model.explained_variance[c] <= model.explained_variance[c - 1] + 1e-12);
    }
}

TEST_CASE("pca rejects out-of-range component counts") {
    Matrix x(10, 5);
    CHECK_THROWS_AS(fit_pca(x, 6), ConfigError);
    CHECK_THROWS_AS(fit_pca(x, 10), ConfigError); // k > n-1
    CHECK_THROWS_AS(fit_pca(x, 0), ConfigError);
}

TEST_CASE("sparse surrogate has the requested shape and reproducibility") {
    RngState a(6), b(6);
    const Dataset da = gen_sparse_surrogate(71, 500, 5, 10, 1.0, a);
    const Dataset db = gen_sparse_surrogate(71, 500, 5, 10, 1.0, b);
    CHECK(da.n() == 71);
    CHECK(da.p() == 500);
    CHECK(da.x.data() == db.x.data());
    CHECK(da.y.data() == db.y.data());
}

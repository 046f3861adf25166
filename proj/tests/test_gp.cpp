#include <doctest.h>

#include <cmath>
#include <random>

#include "kkmoe/gp.hpp"
#include "test_util.hpp"

using namespace kkmoe;
using gp::ExpertHyperparams;

namespace {

Eigen::VectorXd to_vec(std::initializer_list<double> values) {
    Eigen::VectorXd v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values) v(i++) = x;
    return v;
}

} // namespace

TEST_CASE("covariance formula") {
    const ExpertHyperparams theta{0.1, 1.0, 1.0};
    SUBCASE("scalar entries") {
        const auto cov = gp::covariance(to_vec({1.0, 2.0}), to_vec({1.0, 2.0}), theta);
        // diagonal: 1 + w^2 + 1
        CHECK(cov(0, 0) == doctest::Approx(1.0 + 1.0 + 1.0).epsilon(1e-12));
        CHECK(cov(1, 1) == doctest::Approx(1.0 + 4.0 + 1.0).epsilon(1e-12));
        // off-diagonal: exp(-1) + 2 + 1
        CHECK(cov(0, 1) == doctest::Approx(std::exp(-1.0) + 3.0).epsilon(1e-12));
        CHECK(cov(0, 1) == doctest::Approx(3.367879).epsilon(1e-6));
    }
    SUBCASE("SE term vanishes at large separation") {
        const auto cov = gp::covariance(to_vec({1.0}), to_vec({500.0}), theta);
        CHECK(cov(0, 0) == doctest::Approx(1.0 * 500.0 + 1.0).epsilon(1e-12));
    }
    SUBCASE("training covariance adds noise on the diagonal only") {
        const auto plain = gp::covariance(to_vec({1.0, 2.0}), to_vec({1.0, 2.0}), theta);
        const auto noisy = gp::training_covariance(to_vec({1.0, 2.0}), theta);
        CHECK(noisy(0, 0) == doctest::Approx(plain(0, 0) + 0.01).epsilon(1e-12));
        CHECK(noisy(0, 1) == doctest::Approx(plain(0, 1)).epsilon(1e-12));
    }
    SUBCASE("invalid hyperparameters rejected") {
        CHECK_THROWS_AS(gp::covariance(to_vec({1.0}), to_vec({1.0}), {0.0, 1.0, 1.0}),
                        DomainError);
        CHECK_THROWS_AS(gp::covariance(to_vec({1.0}), to_vec({1.0}), {0.1, -1.0, 1.0}),
                        DomainError);
    }
}

TEST_CASE("covariance symmetry and positive definiteness across random theta") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unif(0.05, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        const ExpertHyperparams theta{unif(rng), unif(rng), unif(rng)};
        Eigen::VectorXd omega(8);
        for (int i = 0; i < 8; ++i) omega(i) = 0.2 + unif(rng);
        std::sort(omega.data(), omega.data() + omega.size());
        const auto cov = gp::training_covariance(omega, theta);
        CHECK((cov - cov.transpose()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK_NOTHROW(gp::jittered_llt(cov)); // PD up to jitter
    }
}

TEST_CASE("log marginal likelihood") {
    SUBCASE("empty partition contributes zero") {
        CHECK(gp::log_marginal_likelihood(Eigen::VectorXd(), Eigen::VectorXd(), {0.1, 1.0, 1.0}) ==
              0.0);
    }
    SUBCASE("matches dense oracle on random fixtures") {
        std::mt19937_64 rng(17);
        std::uniform_real_distribution<double> unif(0.1, 2.0);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (int trial = 0; trial < 30; ++trial) {
            const int n = 3 + static_cast<int>(trial % 8);
            const ExpertHyperparams theta{unif(rng), unif(rng), unif(rng)};
            Eigen::VectorXd omega(n), gamma(n);
            for (int i = 0; i < n; ++i) {
                omega(i) = 0.5 + 0.3 * i + 0.1 * unif(rng);
                gamma(i) = normal(rng);
            }
            const double fast = gp::log_marginal_likelihood(gamma, omega, theta);
            const double slow =
                testutil::dense_log_marginal(gamma, gp::training_covariance(omega, theta));
            CHECK(fast == doctest::Approx(slow).epsilon(1e-10));
        }
    }
    SUBCASE("invariant under permutation of points") {
        const ExpertHyperparams theta{0.2, 1.1, 0.8};
        const auto omega = to_vec({1.0, 1.7, 2.4, 3.9});
        const auto gamma = to_vec({0.3, -0.8, 1.1, 0.05});
        const auto omega_p = to_vec({3.9, 1.0, 2.4, 1.7});
        const auto gamma_p = to_vec({0.05, 0.3, 1.1, -0.8});
        CHECK(gp::log_marginal_likelihood(gamma, omega, theta) ==
              doctest::Approx(gp::log_marginal_likelihood(gamma_p, omega_p, theta))
                  .epsilon(1e-12));
    }
}

TEST_CASE("predictive distribution") {
    const ExpertHyperparams theta{1e-4, 1.0, 1.0};
    const auto omega = to_vec({1.0, 1.5, 2.0, 2.5, 3.0});
    const auto gamma = to_vec({0.2, -0.1, 0.4, 0.0, -0.3});

    SUBCASE("interpolates data as noise vanishes") {
        const auto pred = gp::predictive(gamma, omega, omega, theta);
        for (int i = 0; i < 5; ++i)
            CHECK(pred.mean(i) == doctest::Approx(gamma(i)).epsilon(1e-6));
    }
    SUBCASE("empty training set falls back to the prior") {
        const auto star = to_vec({1.2, 2.2});
        const auto pred = gp::predictive(Eigen::VectorXd(), Eigen::VectorXd(), star, theta);
        CHECK(pred.mean.isZero(0.0));
        const auto prior = gp::covariance(star, star, theta);
        CHECK((pred.cov - prior).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("matches dense oracle") {
        const ExpertHyperparams wide{0.3, 1.2, 0.9};
        const auto star = to_vec({1.2, 1.9, 2.7});
        const auto pred = gp::predictive(gamma, omega, star, wide);
        const Eigen::MatrixXd train = gp::training_covariance(omega, wide);
        const Eigen::MatrixXd inv = train.inverse();
        const Eigen::MatrixXd cross = gp::covariance(star, omega, wide);
        const Eigen::VectorXd mean_oracle = cross * inv * gamma;
        const Eigen::MatrixXd cov_oracle =
            gp::covariance(star, star, wide) - cross * inv * cross.transpose();
        CHECK((pred.mean - mean_oracle).cwiseAbs().maxCoeff() < 1e-8);
        CHECK((pred.cov - cov_oracle).cwiseAbs().maxCoeff() < 1e-8);
    }
    SUBCASE("posterior variance never exceeds prior variance") {
        const ExpertHyperparams wide{0.3, 1.2, 0.9};
        const auto star = to_vec({0.5, 1.2, 2.2, 3.8, 5.0});
        const auto pred = gp::predictive(gamma, omega, star, wide);
        const auto prior = gp::covariance(star, star, wide);
        for (int i = 0; i < star.size(); ++i)
            CHECK(pred.cov(i, i) <= prior(i, i) + 1e-10);
    }
}

TEST_CASE("sample_realization") {
    SUBCASE("zero noise returns the mean") {
        const auto mean = to_vec({1.0, 2.0, 3.0});
        const Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(3, 3);
        const auto draw = gp::sample_realization(mean, cov, Eigen::VectorXd::Zero(3));
        CHECK((draw - mean).cwiseAbs().maxCoeff() == 0.0);
    }
    SUBCASE("identity covariance adds the noise") {
        const auto mean = to_vec({1.0, 2.0});
        const auto eps = to_vec({0.5, -0.25});
        const auto draw =
            gp::sample_realization(mean, Eigen::MatrixXd::Identity(2, 2), eps);
        CHECK(draw(0) == doctest::Approx(1.5).epsilon(1e-12));
        CHECK(draw(1) == doctest::Approx(1.75).epsilon(1e-12));
    }
    SUBCASE("empirical covariance of many draws matches input") {
        Eigen::MatrixXd cov(4, 4);
        cov << 2.0, 0.6, 0.3, 0.1,
               0.6, 1.5, 0.5, 0.2,
               0.3, 0.5, 1.2, 0.4,
               0.1, 0.2, 0.4, 1.0;
        const Eigen::VectorXd mean = Eigen::VectorXd::Zero(4);
        std::mt19937_64 rng(23);
        std::normal_distribution<double> normal(0.0, 1.0);
        const int n = 100000;
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(4, 4);
        for (int s = 0; s < n; ++s) {
            Eigen::VectorXd eps(4);
            for (int i = 0; i < 4; ++i) eps(i) = normal(rng);
            const Eigen::VectorXd draw = gp::sample_realization(mean, cov, eps);
            acc += draw * draw.transpose();
        }
        acc /= static_cast<double>(n);
        CHECK((acc - cov).norm() / cov.norm() < 0.02);
    }
    SUBCASE("realization with zero noise equals predictive mean") {
        const ExpertHyperparams theta{0.2, 1.0, 1.0};
        const auto omega = to_vec({1.0, 2.0, 3.0, 4.0});
        const auto gamma = to_vec({0.1, -0.4, 0.6, 0.2});
        const auto star = to_vec({1.5, 2.5, 3.5});
        const auto pred = gp::predictive(gamma, omega, star, theta);
        const auto draw = gp::sample_realization(pred.mean, pred.cov, Eigen::VectorXd::Zero(3));
        CHECK((draw - pred.mean).cwiseAbs().maxCoeff() == 0.0);
    }
}

#pragma once

#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include "rescue/common.hpp"

namespace rescue {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Bearing, inclination from +Z, and range from the camera to a tag.
struct TagMeasurement {
    double bearing = 0.0;
    double elevation = 0.0;
    double range = 0.0;
    int tag_id = 0;
    double timestamp = 0.0;

    Vec3 vector() const { return {bearing, elevation, range}; }
};

/// Measurement noise R = diag(base_diag) * range^exponent, entries ordered
/// (bearing, elevation, range).
struct NoiseModel {
    std::array<double, 3> base_diag{0.05, kPi / 20.0, kPi / 20.0};
    double range_exponent = 4.0;
};

struct TagFilterState {
    int tag_id = 0;
    Vec3 mean = Vec3::Zero();
    Mat3 covariance = Mat3::Zero();
    int n_updates = 0;
    std::vector<Vec3> history;  // raw inverse-model positions, oldest first
};

/// Ideal measurement of a tag seen from `robot` (camera at robot.z).
inline Vec3 measurement_model(const Vec3& tag, const RobotPose& robot) {
    const double dx = tag.x() - robot.x;
    const double dy = tag.y() - robot.y;
    const double dz = tag.z() - robot.z;
    const double rho = std::sqrt(dx * dx + dy * dy + dz * dz);
    if (!(rho > 0.0)) throw NumericalError("measurement model singular at zero range");
    const double bearing = wrap_angle(std::atan2(dy, dx) - robot.yaw);
    const double elevation = std::acos(std::clamp(dz / rho, -1.0, 1.0));
    return {bearing, elevation, rho};
}

inline Vec3 inverse_measurement(const TagMeasurement& z, const RobotPose& robot) {
    const double horizontal = z.range * std::sin(z.elevation);
    const double heading = z.bearing + robot.yaw;
    return {robot.x + horizontal * std::cos(heading), robot.y + horizontal * std::sin(heading),
            robot.z + z.range * std::cos(z.elevation)};
}

inline Mat3 measurement_noise(double range, const NoiseModel& model) {
    if (!(range > 0.0)) throw PreconditionError("measurement noise needs a positive range");
    const double scale = std::pow(range, model.range_exponent);
    Mat3 r = Mat3::Zero();
    for (int i = 0; i < 3; ++i) r(i, i) = model.base_diag[std::size_t(i)] * scale;
    return r;
}

inline TagFilterState init_filter(const TagMeasurement& z, const RobotPose& robot, double sigma0 = 0.5) {
    TagFilterState s;
    s.tag_id = z.tag_id;
    s.mean = inverse_measurement(z, robot);
    s.covariance = Mat3::Identity() * (sigma0 * sigma0);
    s.n_updates = 1;
    s.history.push_back(s.mean);
    return s;
}

/// Third-degree spherical-radial cubature points (columns), 2n of them with
/// equal weights 1/(2n): mean +- sqrt(n) * column j of the Cholesky factor.
inline Eigen::Matrix<double, 3, 6> cubature_points(const Vec3& mean, const Mat3& covariance, int tag_id = -1) {
    Eigen::LLT<Mat3> llt(covariance);
    if (llt.info() != Eigen::Success) {
        llt.compute(covariance + Mat3::Identity() * 1e-9);
        if (llt.info() != Eigen::Success)
            throw NumericalError("Cholesky factorization failed for tag " + std::to_string(tag_id));
    }
    const Mat3 factor = llt.matrixL();
    const double scale = std::sqrt(3.0);
    Eigen::Matrix<double, 3, 6> pts;
    for (int j = 0; j < 3; ++j) {
        pts.col(j) = mean + scale * factor.col(j);
        pts.col(j + 3) = mean - scale * factor.col(j);
    }
    return pts;
}

/// Symmetrizes and floors the spectrum at `floor`.
inline Mat3 condition_covariance(const Mat3& p, double floor = 1e-12) {
    const Mat3 sym = 0.5 * (p + p.transpose());
    Eigen::SelfAdjointEigenSolver<Mat3> eig(sym);
    if (eig.info() != Eigen::Success) return sym;
    Vec3 values = eig.eigenvalues();
    if (values.minCoeff() >= floor) return sym;
    for (int i = 0; i < 3; ++i) values(i) = std::max(values(i), floor);
    const Mat3 out = eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
    return 0.5 * (out + out.transpose());
}

/// Cubature Kalman update for a static tag. Prediction is the identity with
/// no process noise, so only the measurement step changes the state.
inline TagFilterState ckf_update(const TagFilterState& state, const TagMeasurement& z, const RobotPose& robot,
                                 const NoiseModel& model) {
    if (state.tag_id != z.tag_id) throw PreconditionError("measurement tag id does not match filter");
    constexpr int kPoints = 6;
    constexpr double w = 1.0 / kPoints;

    // A point-mass prior has zero gain.
    if (state.covariance.isZero(0.0)) {
        TagFilterState out = state;
        ++out.n_updates;
        out.history.push_back(inverse_measurement(z, robot));
        return out;
    }

    const Eigen::Matrix<double, 3, 6> pts = cubature_points(state.mean, state.covariance, state.tag_id);
    Eigen::Matrix<double, 3, 6> meas;
    for (int j = 0; j < kPoints; ++j) meas.col(j) = measurement_model(pts.col(j), robot);

    // Bearing is averaged on the circle; elevation and range linearly.
    double s = 0.0;
    double c = 0.0;
    Vec3 z_hat = Vec3::Zero();
    for (int j = 0; j < kPoints; ++j) {
        s += w * std::sin(meas(0, j));
        c += w * std::cos(meas(0, j));
        z_hat(1) += w * meas(1, j);
        z_hat(2) += w * meas(2, j);
    }
    z_hat(0) = std::atan2(s, c);

    Mat3 s_zz = Mat3::Zero();
    Mat3 p_xz = Mat3::Zero();
    for (int j = 0; j < kPoints; ++j) {
        Vec3 dz = meas.col(j) - z_hat;
        dz(0) = wrap_angle(dz(0));
        const Vec3 dx = pts.col(j) - state.mean;
        s_zz += w * dz * dz.transpose();
        p_xz += w * dx * dz.transpose();
    }
    s_zz += measurement_noise(z_hat(2), model);

    Vec3 innovation = z.vector() - z_hat;
    innovation(0) = wrap_angle(innovation(0));

    const Mat3 gain = p_xz * s_zz.inverse();
    TagFilterState out = state;
    out.mean = state.mean + gain * innovation;
    out.covariance = condition_covariance(state.covariance - gain * s_zz * gain.transpose());
    if (!out.mean.allFinite() || !out.covariance.allFinite())
        throw NumericalError("non-finite filter state for tag " + std::to_string(state.tag_id));
    Eigen::SelfAdjointEigenSolver<Mat3> check(out.covariance, Eigen::EigenvaluesOnly);
    if (check.eigenvalues().minCoeff() < 0.0)
        throw NumericalError("covariance lost positive semidefiniteness for tag " + std::to_string(state.tag_id));
    ++out.n_updates;
    out.history.push_back(inverse_measurement(z, robot));
    return out;
}

inline Vec3 last_measurement_estimate(const TagFilterState& state) {
    if (state.history.empty()) throw PreconditionError("no measurements recorded for tag");
    return state.history.back();
}

/// One filter per tag id, created on first detection.
class TagFilterBank {
public:
    TagFilterBank() = default;
    TagFilterBank(NoiseModel model, double sigma0) : model_(model), sigma0_(sigma0) {}

    void process(const TagMeasurement& z, const RobotPose& robot) {
        auto it = filters_.find(z.tag_id);
        if (it == filters_.end()) {
            filters_.emplace(z.tag_id, init_filter(z, robot, sigma0_));
        } else {
            it->second = ckf_update(it->second, z, robot, model_);
        }
    }

    const std::map<int, TagFilterState>& filters() const { return filters_; }
    bool has(int id) const { return filters_.count(id) > 0; }

private:
    NoiseModel model_{};
    double sigma0_ = 0.5;
    std::map<int, TagFilterState> filters_;
};

/// {"<id>": {"x", "y", "z", "n_updates"}} for either estimator.
inline nlohmann::ordered_json estimates_to_json(const TagFilterBank& bank, bool use_ckf) {
    nlohmann::ordered_json out = nlohmann::ordered_json::object();
    for (const auto& [id, st] : bank.filters()) {
        const Vec3 p = use_ckf ? st.mean : last_measurement_estimate(st);
        out[std::to_string(id)] = {{"x", p.x()}, {"y", p.y()}, {"z", p.z()}, {"n_updates", st.n_updates}};
    }
    return out;
}

}  // namespace rescue

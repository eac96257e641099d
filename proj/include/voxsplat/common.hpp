// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace voxsplat {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

/// Raised when a binary or text payload cannot be decoded. `offset` is the
/// byte position (or line number for text formats) where decoding stopped.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t offset);

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// File could not be opened, read, or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A quaternion whose norm is too small to normalize.
class DegenerateQuaternion : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Rigid transform mapping points from a local frame into a parent frame:
/// p_parent = rotation * p_local + translation.
struct RigidTransform {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    static RigidTransform identity() { return {}; }
    static RigidTransform from_quaternion(const Vec4& wxyz, const Vec3& t);

    Vec3 apply(const Vec3& p) const { return rotation * p + translation; }
    Vec3 rotate(const Vec3& v) const { return rotation * v; }
    RigidTransform inverse() const;
    RigidTransform operator*(const RigidTransform& rhs) const;

    /// Throws std::invalid_argument unless the rotation is orthonormal with
    /// determinant +1 within `tol`.
    void validate(double tol = 1e-9) const;
};

/// Rotation about +z by `yaw` radians.
Mat3 yaw_rotation(double yaw);

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double lerp(double a, double b, double t) { return a + t * (b - a); }

}  // namespace voxsplat

// Copyright Contributors to the VoxSplat Project
// SPDX-License-Identifier: Apache-2.0

#include <voxsplat/common.hpp>

#include <cmath>

namespace voxsplat {

ParseError::ParseError(const std::string& what, std::size_t offset)
    : std::runtime_error(what + " (at offset " + std::to_string(offset) + ")"), offset_(offset) {}

RigidTransform RigidTransform::from_quaternion(const Vec4& wxyz, const Vec3& t) {
    const double n = wxyz.norm();
    if (!(n > 1e-12)) {
        throw DegenerateQuaternion("pose quaternion has zero norm");
    }
    Eigen::Quaterniond q(wxyz[0] / n, wxyz[1] / n, wxyz[2] / n, wxyz[3] / n);
    RigidTransform out;
    out.rotation = q.toRotationMatrix();
    out.translation = t;
    return out;
}

RigidTransform RigidTransform::inverse() const {
    RigidTransform out;
    out.rotation = rotation.transpose();
    out.translation = -(out.rotation * translation);
    return out;
}

RigidTransform RigidTransform::operator*(const RigidTransform& rhs) const {
    RigidTransform out;
    out.rotation = rotation * rhs.rotation;
    out.translation = rotation * rhs.translation + translation;
    return out;
}

void RigidTransform::validate(double tol) const {
    if (!rotation.allFinite() || !translation.allFinite()) {
        throw std::invalid_argument("rigid transform has non-finite entries");
    }
    const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
    if (ortho > tol) {
        throw std::invalid_argument("rotation is not orthonormal (error " + std::to_string(ortho) + ")");
    }
    if (std::abs(rotation.determinant() - 1.0) > tol) {
        throw std::invalid_argument("rotation determinant is not +1");
    }
}

Mat3 yaw_rotation(double yaw) {
    const double c = std::cos(yaw);
    const double s = std::sin(yaw);
    Mat3 r;
    r << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
    return r;
}

}  // namespace voxsplat

//! Meshes, poses, the mouth model, slicing, collision checks and ray casting.

pub mod collision;
mod food;
mod mesh;
mod mouth;
mod pose;
pub mod raycast;
mod slice;

pub use collision::{projection_collision_check, CollisionModel, Scene, Verdict};
pub use food::{make_food_mesh, FoodShape, FoodSpec};
pub use mesh::TriMesh;
pub use mouth::{BodyRole, ForkGeometry, MouthModel, ProxyBody, RobotProxy};
pub use pose::{rotation_from_z, slerp, Pose};
pub use raycast::{raycast_grid, RayGrid};
pub use slice::{slice_mesh_by_plane, Plane, SlicedMesh};

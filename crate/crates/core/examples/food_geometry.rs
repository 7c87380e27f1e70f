//! Builds each food primitive, slices it at a plane and writes OBJ files.
use bite_transfer::geom::{make_food_mesh, slice_mesh_by_plane, FoodSpec, Plane};
use nalgebra::{Point3, Vector3};

fn main() -> bite_transfer::Result<()> {
    let out = std::env::temp_dir();
    for spec in [FoodSpec::carrot(), FoodSpec::cantaloupe(), FoodSpec::celery(), FoodSpec::strawberry()] {
        let mesh = make_food_mesh(&spec)?;
        let v = mesh.volume()?;
        let cut = slice_mesh_by_plane(&mesh, &Plane::new(Point3::new(0.0, 0.0, 0.005), Vector3::z())?)?;
        let (a, b) = (cut.inside.volume()?, cut.outside.volume()?);
        println!(
            "{:<10} {:>4} tris  volume {:.3e} m^3  cut {:.3e} + {:.3e} (rel err {:.1e})",
            spec.name(),
            mesh.faces.len(),
            v,
            a,
            b,
            ((a + b) - v).abs() / v
        );
        let path = out.join(format!("{}.obj", spec.name()));
        std::fs::write(&path, mesh.to_obj())?;
        println!("           wrote {}", path.display());
    }
    Ok(())
}

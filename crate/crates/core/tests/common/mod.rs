use std::path::Path;

use railar::synth::{generate, SynthOutput, SynthScenario};

/// The standard scene, shortened and at low resolution so a full pipeline
/// run takes seconds.
pub fn small_scenario() -> SynthScenario {
    let mut sc = SynthScenario::standard();
    sc.name = "synth_small".into();
    sc.track.length = 80.0;
    sc.n_frames = 16;
    sc.lidar.n_rays_h = 1024;
    sc.lidar.n_rays_v = 32;
    for cam in &mut sc.cameras {
        cam.width = 160;
        cam.height = 120;
        cam.focal /= 4.0;
    }
    sc
}

pub fn small_bundle(root: &Path) -> SynthOutput {
    generate(&small_scenario(), root).expect("generate small scenario")
}

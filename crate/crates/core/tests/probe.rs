use vsgrasp_core::depth_seg::*;
use vsgrasp_core::geometry::Vec3;
use vsgrasp_core::raster::*;
use vsgrasp_core::sim::*;

#[test]
fn probe_full_state() {
    let scene = SceneConfig::default();
    let cam = scene.camera().aimed_at(scene.workspace_center() + Vec3::new(0.0, 0.0, 0.10));
    let spec = scene.target_object();
    let obj = PlacedObject { spec: spec.clone(), x: 0.02, y: -0.03, rotation: 1.0 };
    let world = WorldState { object: Some(obj), gripper: None };
    let frame = render(&scene, &world, &cam, 7);
    println!("obj mask {}", frame.object_mask.count_set());
    let p = SegParams { expected_width_m: 2.0*spec.radius, expected_height_m: spec.height, ..SegParams::default() };
    let edges = detect_edges(&frame.depth, &p);
    let closed = dilate(&edges, p.close_dilate_radius);
    let fillable = Mask::from_fn(320, 240, |r, c| !closed.get(r, c) && frame.depth.get(r, c) > 0);
    let regions = flood_regions(&fillable);
    let mut sizes: Vec<(usize,usize)> = regions.iter().enumerate().map(|(i,r)| (r.len(), i)).collect();
    sizes.sort_unstable_by(|a,b| b.cmp(a));
    println!("{} regions, top sizes {:?}", regions.len(), sizes.iter().take(6).map(|x|x.0).collect::<Vec<_>>());
    for &(len, i) in sizes.iter().take(4) {
        if len < 50 { break; }
        let region = &regions[i];
        let border = region.iter().filter(|&&(r, c)| r == 0 || c == 0 || r == 239 || c == 319).count();
        let ov = region.iter().filter(|&&(r,c)| frame.object_mask.get(r,c)).count();
        let (mut rmin, mut rmax, mut cmin, mut cmax) = (usize::MAX, 0usize, usize::MAX, 0usize);
        for &(r, c) in region { rmin=rmin.min(r); rmax=rmax.max(r); cmin=cmin.min(c); cmax=cmax.max(c); }
        println!("  region {len} border {border} objov {ov} rows {rmin}..{rmax} cols {cmin}..{cmax}");
    }
    // ascii downsample of fillable + objectmask
    println!("map: #=edge/closed, o=object(fillable), .=fillable, ' '=invalid");
    for r in (0..240).step_by(6) {
        let mut line = String::new();
        for c in (0..320).step_by(4) {
            let ch = if closed.get(r, c) { '#' }
                else if frame.depth.get(r, c) == 0 { ' ' }
                else if frame.object_mask.get(r, c) { 'o' }
                else { '.' };
            line.push(ch);
        }
        println!("{r:3} {line}");
    }
}

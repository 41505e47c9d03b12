use proptest::prelude::*;

use qontexts_core::topology::{allocate_regions, hop_distance, make_device, Device, Link, Preset, Region};

// A random spanning tree plus a few extra edges, so the device is connected.
fn device() -> impl Strategy<Value = Device> {
    (3usize..16).prop_flat_map(|n| {
        let parents = (1..n).map(|i| 0..i).collect::<Vec<_>>();
        let extra = prop::collection::vec((0..n, 0..n), 0..4);
        (parents, extra).prop_map(move |(parents, extra)| {
            let mut links: Vec<Link> = parents.iter().enumerate().map(|(i, &p)| Link::new(p, i + 1)).collect();
            for (a, b) in extra {
                let l = Link::new(a.min(b), a.max(b));
                if a != b && !links.contains(&l) {
                    links.push(l);
                }
            }
            Device::new("random", n, &links).unwrap()
        })
    })
}

fn isolated(dev: &Device, regions: &[Region], buffer: usize) -> bool {
    regions.iter().enumerate().all(|(i, a)| {
        regions[i + 1..].iter().all(|b| {
            a.qubits.iter().all(|&x| {
                b.qubits
                    .iter()
                    .all(|&y| x != y && (buffer == 0 || !dev.has_link(x, y)) && dev.qubit_distance(x, y) > buffer)
            })
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn hop_distance_is_symmetric(dev in device(), i in any::<prop::sample::Index>(), j in any::<prop::sample::Index>()) {
        let ls = dev.links();
        let (a, b) = (ls[i.index(ls.len())], ls[j.index(ls.len())]);
        prop_assert_eq!(hop_distance(&dev, a, b).unwrap(), hop_distance(&dev, b, a).unwrap());
        if a.shares_qubit(&b) {
            prop_assert_eq!(hop_distance(&dev, a, b).unwrap(), 0);
        }
    }

    // Distance between links is the closest pair of endpoints, so a path
    // through a middle link may also have to cross that link: one extra hop.
    #[test]
    fn hop_distance_triangle_within_one_link(
        dev in device(),
        i in any::<prop::sample::Index>(),
        j in any::<prop::sample::Index>(),
        k in any::<prop::sample::Index>(),
    ) {
        let ls = dev.links();
        let (a, b, c) = (ls[i.index(ls.len())], ls[j.index(ls.len())], ls[k.index(ls.len())]);
        let d = |x, y| hop_distance(&dev, x, y).unwrap();
        prop_assert!(d(a, c) <= d(a, b) + d(b, c) + 1);
    }

    #[test]
    fn regions_are_disjoint_connected_and_buffered(sizes in prop::collection::vec(1usize..9, 1..5), buffer in 0usize..3) {
        let dev = make_device(&Preset::Hanoi27).unwrap();
        if let Ok(regions) = allocate_regions(&dev, &sizes, buffer, None) {
            prop_assert_eq!(regions.len(), sizes.len());
            for (r, &s) in regions.iter().zip(&sizes) {
                prop_assert_eq!(r.len(), s);
                prop_assert!(dev.is_connected_subset(&r.qubits));
            }
            prop_assert!(isolated(&dev, &regions, buffer));
            prop_assert_eq!(allocate_regions(&dev, &sizes, buffer, None).unwrap(), regions);
        } else {
            // A single connected region of up to eight qubits always exists.
            prop_assert!(sizes.len() > 1, "{:?}", sizes);
        }
    }

    #[test]
    fn weighted_allocation_is_buffered_and_deterministic(
        sizes in prop::collection::vec(1usize..7, 1..4),
        weights in prop::collection::vec(0.0f64..0.1, 28),
    ) {
        let dev = make_device(&Preset::Hanoi27).unwrap();
        let w = &weights[..dev.n_links()];
        if let Ok(regions) = allocate_regions(&dev, &sizes, 1, Some(w)) {
            prop_assert!(isolated(&dev, &regions, 1));
            prop_assert_eq!(allocate_regions(&dev, &sizes, 1, Some(w)).unwrap(), regions);
        }
    }
}

/// Small requests always fit: two regions of up to five qubits on Hanoi.
#[test]
fn small_pairs_always_fit() {
    let dev = make_device(&Preset::Hanoi27).unwrap();
    for a in 1..=5 {
        for b in 1..=5 {
            let r = allocate_regions(&dev, &[a, b], 1, None).unwrap();
            assert!(isolated(&dev, &r, 1), "{a} {b}");
        }
    }
}

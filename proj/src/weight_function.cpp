namespace kinwave {} // placeholder, replaced as the module lands

package com.acme.config;

import java.nio.file.Files;
import java.nio.file.Paths;
import org.yaml.snakeyaml.Yaml;

public class DefaultsLoader {

    private final Yaml yaml = new Yaml();

    public Object loadDefaults(String profile) {
        String document = "server:\n  port: 8080";
        return yaml.load(document);
    }

    public Object loadBundled(String profile) throws Exception {
        byte[] bytes = Files.readAllBytes(Paths.get("defaults.yml"));
        String document = new String(bytes, "UTF-8");
        return yaml.load(document);
    }
}
